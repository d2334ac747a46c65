"""Gevrey multipliers, norms, bootstrap monitors and inequality checks.

Brackets are Euclidean: <k, eta> = (1 + |k|^2 + |eta|^2)^(1/2), <t> = (1 + t^2)^(1/2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.signal import convolve
from scipy.special import logsumexp

from ._parallel import pmap

__all__ = [
    "GevreyParams",
    "GevreyNorm",
    "BootstrapSeries",
    "MonitorInput",
    "multiplier_A",
    "log_multiplier_A",
    "gevrey_norm",
    "monitor_input_from_trajectory",
    "monitor_input_from_linear",
    "bootstrap_monitor",
    "triangle_ratios",
    "triangle_ineq_check",
    "reference_bounds",
    "product_rule_ratio",
    "product_rule_check",
    "SchurReport",
    "schur_kernel_sum",
    "schur_refinement",
]


@dataclass(frozen=True)
class GevreyParams:
    s: float = 0.5
    lam_inf: float = 0.2
    delta: float = 0.1
    a: float = 0.05
    sigma: float = 12.0
    b: float = 5.0
    m: int = 1
    d: int = 1

    def problems(self):
        """List of violated parameter constraints (empty when valid)."""
        out = []
        if not 0 < self.s <= 1:
            out.append("s must lie in (0, 1]")
        if not self.lam_inf > 0:
            out.append("lam_inf must be positive")
        if not self.delta > 0:
            out.append("delta must be positive")
        if not self.a > 0:
            out.append("a must be positive")
        if not self.sigma > 10 + self.d:
            out.append("sigma must exceed 10 + d")
        if not (int(self.m) == self.m and self.m > self.d / 2):
            out.append("m must be an integer above d/2")
        if not 4 < self.b < self.sigma - 2:
            out.append("b must lie in (4, sigma - 2)")
        return out

    @property
    def schur_admissible(self):
        """1 + a <= 3 s: the regime where the Schur sums stay bounded."""
        return 1.0 + self.a <= 3.0 * self.s

    def lam(self, t):
        t = np.asarray(t, dtype=float)
        return self.lam_inf + self.delta * (1.0 + t * t) ** (-self.a / 2)

    def lam_diff(self, t, tau):
        """lambda(t) - lambda(tau) without cancellation for t close to tau."""
        t = np.asarray(t, dtype=float)
        tau = np.asarray(tau, dtype=float)
        lt = 0.5 * np.log1p(t * t)
        ltau = 0.5 * np.log1p(tau * tau)
        return self.delta * np.exp(-self.a * ltau) * np.expm1(-self.a * (lt - ltau))

    def to_dict(self):
        return {"s": self.s, "lam_inf": self.lam_inf, "delta": self.delta, "a": self.a,
                "sigma": self.sigma, "b": self.b, "m": self.m, "d": self.d}


def _bracket(k, eta):
    k = np.asarray(k, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.sqrt(1.0 + k * k + eta * eta)


def log_multiplier_A(p: GevreyParams, t, k, eta, lam=None):
    """log A = lambda(t) <k,eta>^s + sigma log <k,eta> (k, eta scalar per d = 1)."""
    br = _bracket(k, eta)
    lam_t = p.lam(t) if lam is None else lam
    return lam_t * br**p.s + p.sigma * np.log(br)


def multiplier_A(p: GevreyParams, t, k, eta, lam=None):
    """A(t,k,eta) = exp(lambda(t) <k,eta>^s) <k,eta>^sigma; inf past exp(700)."""
    logA = log_multiplier_A(p, t, k, eta, lam)
    with np.errstate(over="ignore"):
        out = np.where(logA > 700.0, np.inf, np.exp(np.minimum(logA, 700.0)))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class GevreyNorm:
    value: float
    log_value: float
    tail_dominated: bool
    overflow: bool


def gevrey_norm(g, lam, s, sigma=0.0):
    """(sum_k int e^(2 lam <k,eta>^s) <k,eta>^(2 sigma) |g_hat|^2 d eta)^(1/2).

    Evaluated in log space; ``value`` is inf and ``overflow`` set when the
    norm exceeds float range.  ``tail_dominated`` flags fields whose outer
    octave |eta| > max|eta|/2 carries more than 1% of the squared norm.
    """
    mag = np.abs(g.values)
    kk = g.k[:, None].astype(float)
    br = _bracket(kk, g.eta[None, :])
    with np.errstate(divide="ignore"):
        log_terms = 2.0 * (lam * br**s + sigma * np.log(br) + np.log(mag)) + math.log(g.d_eta)
    if not np.any(mag > 0):
        return GevreyNorm(0.0, -math.inf, False, False)
    log_sq = float(logsumexp(log_terms))
    outer = np.abs(g.eta) > 0.5 * np.max(np.abs(g.eta))
    tail_terms = log_terms[:, outer]
    tail_frac = math.exp(float(logsumexp(tail_terms)) - log_sq) if np.any(mag[:, outer] > 0) else 0.0
    log_norm = 0.5 * log_sq
    overflow = log_norm > 709.0
    return GevreyNorm(math.inf if overflow else math.exp(log_norm), log_norm, tail_frac > 0.01, overflow)


# --- bootstrap monitors ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MonitorInput:
    """Density modes rho[t_i, k_j] (k_j >= 0) and profile snapshots on (k, eta)."""

    t: np.ndarray
    k: np.ndarray
    rho: np.ndarray
    snap_t: np.ndarray
    snap_k: np.ndarray
    eta: np.ndarray
    profiles: list


def _denoise(a, floor):
    a = np.array(a)
    a[np.abs(a) < floor] = 0.0
    return a


def monitor_input_from_trajectory(traj, spec, noise_rel=1e-13):
    """Profile snapshots of f = F - f0 pulled back along free transport.

    Coefficients below ``noise_rel * n0`` are roundoff from subtracting the
    equilibrium and are zeroed; the Gevrey weights would otherwise amplify them.
    """
    floor = noise_rel * max(abs(spec.n0), 1e-300)
    grid = traj.grid
    if grid.d != 1:
        raise ValueError("bootstrap monitors are implemented for d = 1")
    v = grid.v
    f0 = spec(v)
    ks = np.arange(grid.n_x // 2)
    profiles, times = [], []
    sign = 1.0 - 2.0 * (np.arange(grid.n_v) % 2)
    for t, F in traj.snapshots:
        c = sfft.rfft(F - f0[None, :], axis=0)[: grid.n_x // 2] / grid.n_x
        c = c * np.exp(1j * ks[:, None] * v[None, :] * t)
        prof = grid.dv * sign * sfft.fftshift(sfft.fft(c, axis=1), axes=1)
        profiles.append(_denoise(prof, floor))
        times.append(t)
    return MonitorInput(traj.t, traj.k, _denoise(traj.rho, floor), np.array(times), ks, grid.eta, profiles)


def monitor_input_from_linear(history, g_in, spec, snap_every=1):
    """Same layout from a linear run: profile g_in - int E_hat i(eta-k tau) f0_hat(eta-k tau)."""
    keep = history.k >= 0
    ks = history.k[keep]
    rows = [int(np.nonzero(g_in.k == kk)[0][0]) if kk in g_in.k else -1 for kk in ks]
    base = np.array([g_in.values[r] if r >= 0 else np.zeros(g_in.eta.size) for r in rows])
    E = history.E_hat[:, keep]
    eta = g_in.eta[None, :]
    kc = ks[:, None].astype(float)
    t = history.t
    dt = float(t[1] - t[0])

    def integrand(n):
        arg = eta - kc * t[n]
        return E[n][:, None] * 1j * arg * spec.fourier(arg)

    acc = np.zeros(base.shape, dtype=complex)
    prev = integrand(0)
    profiles, times = [base.copy()], [float(t[0])]
    for n in range(1, t.size):
        cur = integrand(n)
        acc += 0.5 * dt * (prev + cur)
        prev = cur
        if n % snap_every == 0 or n == t.size - 1:
            profiles.append(base - acc)
            times.append(float(t[n]))
    return MonitorInput(t, ks, history.rho[:, keep], np.array(times), ks, g_in.eta, profiles)


@dataclass
class BootstrapSeries:
    t: np.ndarray
    density_norm: np.ndarray
    snap_t: np.ndarray
    profile_norm: np.ndarray
    profile_sup: np.ndarray
    exceeded_at: float | None = None
    reliable: bool = True
    notes: list = field(default_factory=list)

    def sup(self):
        return float(np.max(self.density_norm)), float(np.max(self.profile_sup))


def _fd4(f, h):
    p = np.pad(f, [(0, 0), (2, 2)])
    return (-p[:, 4:] + 8 * p[:, 3:-1] - 8 * p[:, 1:-3] + p[:, :-4]) / (12 * h)


def bootstrap_monitor(inp: MonitorInput, p: GevreyParams, bounds=None, factor=10.0):
    """Running bootstrap quantities.

    density_norm(t) = || <tau>^b A(tau, k, k tau) rho ||_{L2(0,t; L2_x)}
    profile_sup(t)  = sup_{tau <= t} sum_{j <= m} || <k,eta> A(tau) D_eta^j f_hat(tau) ||

    With ``bounds`` = (B1, B2) the first time either quantity exceeds
    ``factor`` times its bound is reported in ``exceeded_at``.
    """
    t = inp.t
    kk = inp.k.astype(float)
    # +k and -k modes of a real field; the k = 0 mode is the background
    log_mult = np.where(kk > 0, math.log(2.0), -np.inf)
    b_log = p.b * 0.5 * np.log1p(t * t)
    logA = log_multiplier_A(p, t[:, None], kk[None, :], kk[None, :] * t[:, None])
    with np.errstate(divide="ignore"):
        logterm = 2.0 * (b_log[:, None] + logA + np.log(np.abs(inp.rho))) + math.log(2 * math.pi)
    logterm = logterm + log_mult[None, :]
    dens = np.exp(np.clip(logsumexp(logterm, axis=1), -745, 700))
    dens[~np.isfinite(dens)] = 0.0
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (dens[1:] + dens[:-1]))])
    density_norm = np.sqrt(cum)

    h = float(inp.eta[1] - inp.eta[0])
    kc = inp.snap_k[:, None].astype(float)
    wk = np.where(inp.snap_k > 0, 2.0, 1.0)[:, None]
    br = _bracket(kc, inp.eta[None, :])
    outer = np.abs(inp.eta) > 0.5 * np.max(np.abs(inp.eta))
    prof_vals = []
    reliable = True
    for ts, prof in zip(inp.snap_t, inp.profiles):
        logB = np.log(br) + log_multiplier_A(p, ts, kc, inp.eta[None, :])
        total = 0.0
        der = prof
        for j in range(int(p.m) + 1):
            if j > 0:
                der = _fd4(der, h)
            with np.errstate(divide="ignore"):
                lt = 2.0 * (logB + np.log(np.abs(der))) + np.log(wk) + math.log(h)
            ls = float(logsumexp(lt)) if np.any(np.abs(der) > 0) else -np.inf
            if j > 0 and np.isfinite(ls) and np.any(np.abs(der[:, outer]) > 0):
                if float(logsumexp(lt[:, outer])) - ls > math.log(0.01):
                    reliable = False
            total += math.exp(0.5 * min(ls, 1400.0)) if np.isfinite(ls) else 0.0
        prof_vals.append(total)
    prof_vals = np.array(prof_vals)
    prof_sup = np.maximum.accumulate(prof_vals) if prof_vals.size else prof_vals
    notes = []
    if not reliable:
        notes.append("eta-derivatives dominated by the top octave of the lattice")
    exceeded = None
    if bounds is not None:
        b1, b2 = bounds
        hits = []
        over1 = np.nonzero(density_norm > factor * b1)[0]
        if over1.size:
            hits.append(float(t[over1[0]]))
        over2 = np.nonzero(prof_sup > factor * b2)[0]
        if over2.size:
            hits.append(float(inp.snap_t[over2[0]]))
        exceeded = min(hits) if hits else None
    return BootstrapSeries(t, density_norm, np.asarray(inp.snap_t), prof_vals, prof_sup,
                           exceeded, reliable, notes)


def reference_bounds(series: BootstrapSeries):
    """(B1, B2): final density norm and running profile sup of a reference run."""
    b2 = float(series.profile_sup[-1]) if series.profile_sup.size else 0.0
    return float(series.density_norm[-1]), b2


# --- triangle inequalities -------------------------------------------------------


def triangle_ratios(x, y, s, K=4.0):
    """Per-sample ratios of the three fractional-power triangle inequalities.

    r1 = |x^s - y^s| (x^(1-s) + y^(1-s)) / |x - y|         (at most 2)
    r2 = |x^s - y^s| / (s (K-1)^(s-1) |x - y|^s)            (at most 1 when |x - y| <= x / K)
    r3 = (x + y)^s / ((K/(1+K))^(1-s) (x^s + y^s))          (at most 1 when y <= x <= K y)
    Ratios are 0 where x = y for r1 and r2; r2 is nan when K = 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gap = np.abs(x**s - y**s)
    diff = np.abs(x - y)
    same = diff == 0
    safe = np.where(same, 1.0, diff)
    r1 = np.where(same, 0.0, gap * (x ** (1 - s) + y ** (1 - s)) / safe)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef2 = s / (K - 1.0) ** (1.0 - s) if K > 1.0 else math.nan
        r2 = np.where(same, 0.0, gap / (coef2 * safe**s))
    coef3 = (K / (1.0 + K)) ** (1.0 - s)
    r3 = (x + y) ** s / (coef3 * (x**s + y**s))
    return r1, r2, r3


def triangle_ineq_check(s, n_samples=1_000_000, K=4.0, seed=0, rtol=1e-12):
    """Worst-case ratios of triangle_ratios over random samples.

    Each inequality is sampled under its own side condition; half of the
    first family is drawn with x and y nearly equal.  ``holds`` is True when
    no sample breaks any of the three bounds (up to ``rtol``).
    """
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    if not K > 1:
        raise ValueError("K must exceed 1")
    rng = np.random.default_rng(seed)
    x = 10.0 ** rng.uniform(-6, 6, n_samples)
    y = 10.0 ** rng.uniform(-6, 6, n_samples)
    near = rng.random(n_samples) < 0.5
    y = np.where(near, x * (1.0 + rng.uniform(-1e-3, 1e-3, n_samples)), y)
    r1 = triangle_ratios(x, y, s, K)[0]

    x2 = 10.0 ** rng.uniform(-6, 6, n_samples)
    y2 = x2 * (1.0 + rng.uniform(-1.0, 1.0, n_samples) / K)
    r2 = triangle_ratios(x2, y2, s, K)[1]

    y3 = 10.0 ** rng.uniform(-6, 6, n_samples)
    x3 = y3 * rng.uniform(1.0, K, n_samples)
    r3 = triangle_ratios(x3, y3, s, K)[2]

    bad = int(np.sum(r1 > 2.0 * (1 + rtol)) + np.sum(r2 > 1 + rtol) + np.sum(r3 > 1 + rtol))
    return {
        "ratio1": float(r1.max()), "ratio2": float(r2.max()), "ratio3": float(r3.max()),
        "coef2": s / (K - 1.0) ** (1.0 - s), "coef3": (K / (1.0 + K)) ** (1.0 - s),
        "violations": bad,
        "holds": bad == 0,
    }


# --- product rule ----------------------------------------------------------------


def _product_constant(s):
    return max(s / 7.0 ** (1.0 - s), (8.0 / 9.0) ** (1.0 - s))


def _freq_mag(shape, d):
    axes = [np.arange(n) - n // 2 for n in shape]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.sqrt(sum(g.astype(float) ** 2 for g in grids))


def product_rule_ratio(f, g, s, lam, d=1, c=None):
    """LHS / RHS of the Gevrey product rule for centred coefficient arrays f, g.

    Norms are coefficient l2 norms; the Sobolev weight is <k>^(d/2 + 1/2).
    """
    if c is None:
        c = _product_constant(s)
    fg = convolve(f, g, method="direct")
    def norm(arr, weight):
        return math.sqrt(float(np.sum(weight * np.abs(arr) ** 2)))
    mag_fg = _freq_mag(fg.shape, d)
    mag = _freq_mag(f.shape, d)
    full = np.exp(2 * lam * mag**s)
    low = (1 + mag * mag) ** (d / 2 + 0.5) * np.exp(2 * c * lam * mag**s)
    lhs = norm(fg, np.exp(2 * lam * mag_fg**s))
    rhs = norm(f, low) * norm(g, full) + norm(g, low) * norm(f, full)
    return lhs / rhs if rhs > 0 else 0.0


def product_rule_check(s, lam, d=1, trials=1000, band=16, seed=0):
    """Empirical product-rule constant over random band-limited pairs."""
    rng = np.random.default_rng(seed)
    shape = (2 * band + 1,) * d
    mag = _freq_mag(shape, d)
    worst = 0.0
    for _ in range(trials):
        mu_f, mu_g = rng.uniform(0.0, 2.0, 2)
        f = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.exp(-mu_f * mag)
        g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.exp(-mu_g * mag)
        worst = max(worst, product_rule_ratio(f, g, s, lam, d))
    return worst


# --- Schur sums ------------------------------------------------------------------

_GLX, _GLW = np.polynomial.legendre.leggauss(16)


def _graded_edges(lo, hi, spikes, anchor):
    """Panel edges on [lo, hi] refined geometrically around spikes and an anchor."""
    span = hi - lo
    offsets = span * np.geomspace(1e-9, 1.0, 48)
    pts = [lo, hi]
    for c in list(spikes) + [anchor]:
        for sgn in (-1.0, 1.0):
            e = c + sgn * offsets
            pts.extend(e[(e > lo) & (e < hi)].tolist())
    pts.extend(np.linspace(lo, hi, 9).tolist())
    return np.unique(np.array(pts))


def _quad_nodes(edges):
    a, b = edges[:-1], edges[1:]
    x = (0.5 * (b - a)[:, None] * (_GLX + 1.0) + a[:, None]).ravel()
    w = (0.5 * (b - a)[:, None] * _GLW).ravel()
    return x, w


def _kernel(p, t, tau, k, l):
    br = _bracket(k - l, k * t - l * tau) ** p.s
    gain = p.lam_diff(t, tau) * _bracket(k, k * t) ** p.s
    logw = 0.5 * p.b * (np.log1p(t * t) - np.log1p(tau * tau))
    return np.abs(k * l) * np.abs(t - tau) / (l * l) * np.exp(logw - p.delta * p.lam(tau) * br + gain)


def _row_sum(p, t, k, ls):
    spikes = [k * t / l for l in ls if t / 2 < k * t / l < t]
    tau, w = _quad_nodes(_graded_edges(t / 2, t, spikes, t))
    K = _kernel(p, t, tau[None, :], float(k), ls[:, None])
    return float(np.sum(K @ w))


def _col_sum(p, tau, l, ks, t_max):
    hi = min(2 * tau, t_max)
    if hi <= tau:
        return 0.0
    spikes = [l * tau / k for k in ks if tau < l * tau / k < hi]
    t, w = _quad_nodes(_graded_edges(tau, hi, spikes, tau))
    K = _kernel(p, t[None, :], tau, ks[:, None], float(l))
    return float(np.sum(K @ w))


@dataclass
class SchurReport:
    row_sup: float
    col_sup: float
    k_max: int
    t_max: float


def schur_kernel_sum(p: GevreyParams, k_max, t_max, per_decade=8, diagonal_only=False):
    """Both Schur norms of the near-region kernel (tau in [t/2, t]).

    row: sup_{t,k} sum_l int_{t/2}^{t} K d tau,   col: sup_{tau,l} sum_k int_tau^{min(2 tau, T)} K dt,
    with 1 <= |k|, |l| <= k_max and t on a logarithmic grid in [1, t_max].
    ``diagonal_only`` keeps the l = k term alone.
    """
    if k_max < 1 or t_max <= 1:
        raise ValueError("need k_max >= 1 and t_max > 1")
    times = np.geomspace(1.0, t_max, int(per_decade * math.log10(t_max)) + 1)
    all_l = np.array([l for l in range(-k_max, k_max + 1) if l != 0], dtype=float)
    modes = range(1, k_max + 1)

    def row_for(k):
        ls = np.array([float(k)]) if diagonal_only else all_l
        return max(_row_sum(p, t, k, ls) for t in times)

    def col_for(l):
        ks = np.array([float(l)]) if diagonal_only else all_l
        return max(_col_sum(p, tau, l, ks, t_max) for tau in times)

    row = max(pmap(row_for, modes))
    col = max(pmap(col_for, modes))
    return SchurReport(row, col, int(k_max), float(t_max))


def schur_refinement(p: GevreyParams, truncations, rtol=1e-3, growth=1.5, **kw):
    """Run schur_kernel_sum over increasing (k_max, t_max) pairs.

    Returns (reports, status) with status "cauchy" when the last refinement
    changes both sups by less than ``rtol`` (relative), "divergent" when
    either grows by more than ``growth`` at every refinement, else "undecided".
    """
    reports = [schur_kernel_sum(p, k, t, **kw) for k, t in truncations]
    if len(reports) < 2:
        raise ValueError("need at least two truncations")
    a, b = reports[-2], reports[-1]
    if abs(b.row_sup - a.row_sup) <= rtol * abs(b.row_sup) and abs(b.col_sup - a.col_sup) <= rtol * abs(b.col_sup):
        return reports, "cauchy"
    ratios = [max(y.row_sup / x.row_sup, y.col_sup / x.col_sup) for x, y in zip(reports, reports[1:])]
    if all(r > growth for r in ratios):
        return reports, "divergent"
    if not p.schur_admissible:
        warnings.warn("parameters violate 1 + a <= 3 s", RuntimeWarning, stacklevel=2)
    return reports, "undecided"
