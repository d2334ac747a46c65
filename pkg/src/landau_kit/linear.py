"""Free transport and linearized Vlasov-Poisson on the one-dimensional torus.

Conventions
-----------
* x-modes are Fourier coefficients: g(x) = sum_k g_k exp(i k x), so
  g_k = (1/2pi) int g exp(-i k x) dx.
* v is transformed without prefactor: g_hat(eta) = int exp(-i v eta) g dv.
* With these, free transport gives rho_hat(t, k) = g_hat_in(k, k t) exactly
  and the field mode is E_hat_k = -i k W_hat(k) rho_hat_k.
* ``l2_norm`` of a spectral field is (sum_k int |g_hat|^2 d eta)^(1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.special import comb

from ._parallel import pmap, worker_count
from .dispersion import kernel_time
from .volterra import VolterraProblem, solve_volterra

__all__ = [
    "PhaseSpaceGrid",
    "SpectralField",
    "DensityHistory",
    "RateFit",
    "ScatteringResult",
    "FktldReport",
    "interpolate_eta",
    "free_transport_density",
    "free_transport_evolve",
    "fktld_check",
    "linear_vp_density",
    "scattering_profile",
    "field_modes",
    "field_norm",
    "fit_exponential_rate",
    "l2_norm",
]


def _is_pow2(n):
    return n >= 2 and n & (n - 1) == 0


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform grid on T^d x [-v_max, v_max)^d plus a time grid."""

    d: int = 1
    n_x: int = 32
    n_v: int = 1024
    v_max: float = 8.0
    dt: float = 0.1
    t_final: float = 20.0

    def __post_init__(self):
        problems = []
        if self.d not in (1, 2):
            problems.append("d must be 1 or 2")
        if not _is_pow2(self.n_x):
            problems.append("n_x must be a power of two")
        if not _is_pow2(self.n_v) or self.n_v < 16:
            problems.append("n_v must be a power of two (>= 16)")
        if not self.v_max > 0:
            problems.append("v_max must be positive")
        if not self.dt > 0:
            problems.append("dt must be positive")
        if not self.t_final >= 0:
            problems.append("t_final must be non-negative")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def dx(self):
        return 2.0 * math.pi / self.n_x

    @property
    def dv(self):
        return 2.0 * self.v_max / self.n_v

    @property
    def d_eta(self):
        return math.pi / self.v_max

    @property
    def x(self):
        return self.dx * np.arange(self.n_x)

    @property
    def v(self):
        return -self.v_max + self.dv * np.arange(self.n_v)

    @property
    def k(self):
        return np.arange(-self.n_x // 2, self.n_x // 2)

    @property
    def eta(self):
        return self.d_eta * (np.arange(self.n_v) - self.n_v // 2)

    @property
    def n_t(self):
        return int(round(self.t_final / self.dt))

    @property
    def t(self):
        return self.dt * np.arange(self.n_t + 1)

    def to_dict(self):
        return {
            "d": self.d, "n_x": self.n_x, "n_v": self.n_v,
            "v_max": self.v_max, "dt": self.dt, "t_final": self.t_final,
        }


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Snapshot of g_hat(k, eta) on integer modes ``k`` and a uniform ``eta`` grid."""

    k: np.ndarray
    eta: np.ndarray
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        k = np.asarray(self.k, dtype=int)
        eta = np.asarray(self.eta, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (k.size, eta.size):
            raise ValueError("values must have shape (len(k), len(eta))")
        if np.any(np.diff(k) <= 0):
            raise ValueError("modes must be strictly increasing")
        if eta.size < 8 or not np.allclose(np.diff(eta), eta[1] - eta[0], rtol=1e-9):
            raise ValueError("eta grid must be uniform with at least 8 points")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite spectral values")
        object.__setattr__(self, "k", _frozen(k))
        object.__setattr__(self, "eta", _frozen(eta))
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def d_eta(self):
        return float(self.eta[1] - self.eta[0])

    @classmethod
    def from_function(cls, fn, k, eta, t=0.0):
        """Tabulate ``fn(k, eta)`` (vectorized over eta) on the lattice."""
        k = np.atleast_1d(np.asarray(k, dtype=int))
        eta = np.asarray(eta, dtype=float)
        return cls(k, eta, np.array([fn(int(kk), eta) for kk in k], dtype=complex), t)

    @classmethod
    def from_physical(cls, F, grid: PhaseSpaceGrid, t=0.0):
        """Transform samples F[x_i, v_j] to coefficients on (grid.k, grid.eta)."""
        F = np.asarray(F)
        if F.shape != (grid.n_x, grid.n_v):
            raise ValueError("expected array of shape (n_x, n_v)")
        xs = sfft.fftshift(sfft.fft(F, axis=0, workers=worker_count()), axes=0) / grid.n_x
        vs = sfft.fftshift(sfft.fft(xs, axis=1, workers=worker_count()), axes=1)
        sign = 1.0 - 2.0 * (np.arange(grid.n_v) % 2)
        return cls(grid.k, grid.eta, grid.dv * vs * sign, t)

    def to_physical(self, grid: PhaseSpaceGrid):
        """Inverse of ``from_physical`` (requires the full grid lattice)."""
        if self.k.size != grid.n_x or self.eta.size != grid.n_v:
            raise ValueError("field lattice does not match the grid")
        sign = 1.0 - 2.0 * (np.arange(grid.n_v) % 2)
        vs = sfft.ifft(sfft.ifftshift(self.values * sign / grid.dv, axes=1), axis=1)
        xs = sfft.ifft(sfft.ifftshift(vs, axes=0) * grid.n_x, axis=0)
        return xs.real

    def mode(self, k):
        idx = np.nonzero(self.k == k)[0]
        if idx.size == 0:
            return None
        return self.values[idx[0]]

    def replace(self, values, t):
        return SpectralField(self.k, self.eta, values, t)

    def is_conjugate_symmetric(self, tol=1e-12):
        """True if g_hat(-k, -eta) = conj g_hat(k, eta) wherever both are stored."""
        if np.isclose(self.eta[0], -self.eta[-1]):
            lo = 0
        elif np.isclose(self.eta[1], -self.eta[-1]):
            lo = 1
        else:
            return False
        vals = self.values[:, lo:]
        scale = max(float(np.max(np.abs(vals), initial=0.0)), 1e-300)
        for i, kk in enumerate(self.k):
            j = np.nonzero(self.k == -kk)[0]
            if j.size == 0:
                continue
            if np.max(np.abs(vals[i] - np.conj(vals[j[0]][::-1]))) > tol * scale:
                return False
        return True


def l2_norm(g: SpectralField, weight=None):
    """(sum_k int w |g_hat|^2 d eta)^(1/2) with optional weight w(k, eta)."""
    sq = np.abs(g.values) ** 2
    if weight is not None:
        sq = sq * weight(g.k[:, None], g.eta[None, :])
    return math.sqrt(g.d_eta * float(np.sum(sq)))


# --- band-limited interpolation in eta ------------------------------------

_NPT = 8
_BARY = np.array([(-1) ** j * comb(_NPT - 1, j, exact=True) for j in range(_NPT)], dtype=float)


def interpolate_eta(values, eta, targets, full_output=False):
    """8-point barycentric interpolation of ``values`` (..., n_eta) at ``targets``.

    Targets outside the lattice give 0 and set the truncation flag.  Nodes
    are reproduced exactly.
    """
    values = np.asarray(values)
    targets = np.asarray(targets, dtype=float)
    n = eta.size
    h = float(eta[1] - eta[0])
    s = (targets - eta[0]) / h
    outside = (s < -1e-9) | (s > n - 1 + 1e-9)
    s_in = np.clip(s, 0.0, n - 1.0)
    nearest = np.rint(s_in)
    at_node = np.abs(s_in - nearest) <= 1e-9
    start = np.clip(np.floor(s_in).astype(int) - (_NPT // 2 - 1), 0, n - _NPT)
    idx = start[..., None] + np.arange(_NPT)
    diff = s_in[..., None] - idx
    diff = np.where(diff == 0, 1.0, diff)
    w = _BARY / diff
    w = w / np.sum(w, axis=-1, keepdims=True)
    gathered = values[..., idx]
    out = np.sum(gathered * w, axis=-1)
    node_vals = values[..., nearest.astype(int)]
    out = np.where(at_node, node_vals, out)
    out = np.where(outside, 0.0, out)
    truncated = bool(np.any(outside))
    return (out, truncated) if full_output else out


def free_transport_density(g_in: SpectralField, k, t, full_output=False):
    """rho_hat(t, k) = g_hat_in(k, k t) by local interpolation in eta."""
    row = g_in.mode(k)
    t_arr = np.asarray(t, dtype=float)
    if row is None:
        out = np.zeros(t_arr.shape, dtype=complex)
        return (out, False) if full_output else out
    out, trunc = interpolate_eta(row, g_in.eta, k * t_arr, full_output=True)
    out = np.asarray(out, dtype=complex)
    if t_arr.ndim == 0:
        out = complex(out)
    return (out, trunc) if full_output else out


def free_transport_evolve(g: SpectralField, dt):
    """Exact transport by ``dt`` in the dual variables: g_hat(k, eta + k dt)."""
    if dt == 0:
        return g.replace(np.array(g.values), g.t)
    vals = np.empty_like(g.values)
    for i, kk in enumerate(g.k):
        if kk == 0:
            vals[i] = g.values[i]
        else:
            vals[i] = interpolate_eta(g.values[i], g.eta, g.eta + kk * dt)
    return g.replace(vals, g.t + dt)


# --- Fourier-side L2_t estimate for free transport -------------------------


@dataclass(frozen=True)
class FktldReport:
    lhs: float
    rhs: float
    ratio: float
    inconclusive: bool


def _weight(k, eta, sigma, lam, s):
    br = np.sqrt(1.0 + k * k + eta * eta)
    return br**sigma * np.exp(lam * br**s)


def _fd_derivative(f, h, order):
    """Centered 4th-order finite-difference derivative applied ``order`` times."""
    out = np.asarray(f)
    for _ in range(order):
        p = np.pad(out, [(0, 0)] * (out.ndim - 1) + [(2, 2)])
        out = (-p[..., 4:] + 8 * p[..., 3:-1] - 8 * p[..., 1:-3] + p[..., :-4]) / (12 * h)
    return out


def fktld_check(g_in: SpectralField, m=1, sigma=0.0, lam=0.0, s=1.0, T=20.0, n_t=4001):
    """Compare the weighted L2_t L2_x density norm with the weighted data norm.

    lhs^2 = int_{-T}^{T} sum_k |k| <k,kt>^(2 sigma) e^(2 lam <k,kt>^s) |g_hat(k,kt)|^2 dt
    rhs^2 = sum_{j<=m} sum_k int |d_eta^j (<k,eta>^sigma e^(lam <k,eta>^s) g_hat)|^2 d eta

    Flags ``inconclusive`` when lhs still grows by more than 1% from T/2 to T.
    """
    t = np.linspace(-T, T, n_t)
    dens = np.zeros_like(t)
    for kk in g_in.k:
        if kk == 0:
            continue
        rho = free_transport_density(g_in, int(kk), t)
        dens += abs(kk) * _weight(kk, kk * t, sigma, lam, s) ** 2 * np.abs(rho) ** 2
    lhs = math.sqrt(max(float(np.trapezoid(dens, t)), 0.0))
    half = np.abs(t) <= T / 2
    lhs_half = math.sqrt(max(float(np.trapezoid(dens[half], t[half])), 0.0))
    weighted = g_in.values * _weight(g_in.k[:, None].astype(float), g_in.eta[None, :], sigma, lam, s)
    rhs_sq = 0.0
    for j in range(m + 1):
        der = _fd_derivative(weighted, g_in.d_eta, j)
        rhs_sq += g_in.d_eta * float(np.sum(np.abs(der) ** 2))
    rhs = math.sqrt(rhs_sq)
    ratio = lhs / rhs if rhs > 0 else 0.0
    inconclusive = lhs > 0 and (lhs - lhs_half) > 0.01 * lhs
    return FktldReport(lhs, rhs, ratio, bool(inconclusive))


# --- linearized Vlasov-Poisson ----------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityHistory:
    """rho_hat(t_i, k) per mode, the field modes and the field L2 norm."""

    t: np.ndarray
    k: np.ndarray
    rho: np.ndarray
    E_hat: np.ndarray
    E_norm: np.ndarray

    def mode(self, k):
        idx = np.nonzero(self.k == k)[0]
        if idx.size == 0:
            raise KeyError(k)
        return self.rho[:, idx[0]]

    def records(self):
        """Rows (t, k, re_rho, im_rho, E_norm) in time-major order."""
        for i, tt in enumerate(self.t):
            for j, kk in enumerate(self.k):
                r = self.rho[i, j]
                yield {"t": float(tt), "k": int(kk), "re_rho": float(r.real),
                       "im_rho": float(r.imag), "E_norm": float(self.E_norm[i])}


def field_modes(W, k, rho):
    """E_hat = -i k W_hat(k) rho_hat (zero at k = 0); rho has modes on its last axis."""
    k = np.asarray(k)
    sym = np.zeros(k.shape)
    nz = k != 0
    sym[nz] = W.symbol(k[nz])
    return -1j * k * sym * rho


def field_norm(E_hat):
    """||E||_{L2(T)} from Fourier coefficients along the last axis."""
    return np.sqrt(2.0 * math.pi * np.sum(np.abs(E_hat) ** 2, axis=-1))


def linear_vp_density(g_in: SpectralField, spec, W, grid: PhaseSpaceGrid):
    """Solve rho = H + K * rho per mode, with H the free-transport density."""
    t = grid.t
    ks = np.asarray(g_in.k)
    symmetric = g_in.is_conjugate_symmetric()

    def solve(kk):
        H = np.asarray(free_transport_density(g_in, int(kk), t), dtype=complex)
        if kk == 0:
            return H
        K = kernel_time(spec, W, int(kk), t)
        return solve_volterra(VolterraProblem(grid.dt, H, K))

    direct = [kk for kk in ks if not (symmetric and kk < 0 and -kk in ks)]
    solved = dict(zip(direct, pmap(solve, direct)))
    rho = np.empty((t.size, ks.size), dtype=complex)
    for j, kk in enumerate(ks):
        rho[:, j] = solved[kk] if kk in solved else np.conj(solved[-kk])
    E_hat = field_modes(W, ks, rho)
    return DensityHistory(t, ks, rho, E_hat, field_norm(E_hat))


@dataclass(frozen=True)
class RateFit:
    rate: float
    intercept: float
    r2: float
    n_points: int
    window: tuple


def _local_maxima(t, logy):
    """Parabolically refined interior local maxima of a sampled curve."""
    i = np.nonzero((logy[1:-1] > logy[:-2]) & (logy[1:-1] >= logy[2:]))[0] + 1
    if i.size == 0:
        return np.array([]), np.array([])
    a, b, c = logy[i - 1], logy[i], logy[i + 1]
    den = a - 2 * b + c
    off = np.where(den != 0, 0.5 * (a - c) / np.where(den != 0, den, 1.0), 0.0)
    off = np.clip(off, -0.5, 0.5)
    h = t[1] - t[0]
    return t[i] + off * h, b - 0.25 * (a - c) * off


def fit_exponential_rate(t, y, lower=1e-10, upper=1e-2, skip=None):
    """Least-squares exponential rate of ``y`` (positive = growth).

    Decaying signals are fitted where y / y(0) lies in [lower, upper];
    growing ones where y exceeds 1/upper times its minimum.  Oscillating
    signals are fitted through their local maxima so that zeros of the
    oscillation do not bias the slope.  The first oscillation (or the
    first tenth of the record) is skipped.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        logy = np.log(np.maximum(y, 1e-300))
    pt, pv = _local_maxima(t, logy)
    if skip is None:
        skip = pt[1] if pt.size >= 2 else t[0] + 0.1 * (t[-1] - t[0])
    ref = logy[0]
    growing = logy[-1] > ref

    def window(tt, lv):
        if growing:
            return (tt >= skip) & (lv >= np.min(logy) + math.log(1.0 / upper))
        return (tt >= skip) & (lv <= ref + math.log(upper)) & (lv >= ref + math.log(lower))

    tt, lv = t, logy
    keep = window(t, logy)
    if pt.size and np.count_nonzero(keep) >= 2:
        span = t[keep][-1] - t[keep][0]
        pkeep = window(pt, pv)
        # oscillating throughout the window: fit the envelope through the peaks
        if np.count_nonzero(pkeep) >= 3 and np.ptp(pt[pkeep]) >= 0.5 * span:
            tt, lv, keep = pt, pv, pkeep
    if np.count_nonzero(keep) < 3:
        raise ValueError("too few samples inside the fitting window")
    x, z = tt[keep], lv[keep]
    slope, intercept = np.polyfit(x, z, 1)
    resid = z - (slope * x + intercept)
    ss = float(np.sum((z - z.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, int(x.size), (float(x[0]), float(x[-1])))


# --- scattering profile --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    f_inf: SpectralField
    t: np.ndarray
    distance: np.ndarray
    tail: float
    converged: bool
    warnings: list = field(default_factory=list)


def scattering_profile(history: DensityHistory, g_in: SpectralField, spec, grid=None, tol=1e-6,
                       weight=None):
    """Limit profile f_inf(k, eta) = g_hat_in - int_0^inf E_hat(tau,k) i(eta-k tau) f0_hat(eta-k tau) d tau.

    The integral is truncated at the end of ``history`` (trapezoid rule in
    tau).  ``distance[n]`` is the (optionally weighted) L2 distance between
    the profile at t_n and the truncated limit.
    """
    t = history.t
    dt = float(t[1] - t[0]) if t.size > 1 else 1.0
    idx = [int(np.nonzero(history.k == kk)[0][0]) if kk in history.k else -1 for kk in g_in.k]
    kcol = g_in.k[:, None].astype(float)
    eta = g_in.eta[None, :]
    w = np.ones(g_in.values.shape) if weight is None else weight(kcol, eta)
    E = np.zeros((t.size, g_in.k.size), dtype=complex)
    for j, i in enumerate(idx):
        if i >= 0:
            E[:, j] = history.E_hat[:, i]

    def integrand(n):
        arg = eta - kcol * t[n]
        return E[n][:, None] * 1j * arg * spec.fourier(arg)

    total = np.zeros(g_in.values.shape, dtype=complex)
    prev = integrand(0)
    steps = []
    for n in range(1, t.size):
        cur = integrand(n)
        inc = 0.5 * dt * (prev + cur)
        steps.append(inc)
        total += inc
        prev = cur
    f_inf = g_in.replace(g_in.values - total, math.inf)
    # distance(t_n) = norm of the remaining integral over [t_n, T]
    dist = np.zeros(t.size)
    remaining = np.array(total)
    d_eta = g_in.d_eta
    dist[0] = math.sqrt(d_eta * float(np.sum(w * np.abs(remaining) ** 2)))
    for n, inc in enumerate(steps, start=1):
        remaining -= inc
        dist[n] = math.sqrt(d_eta * float(np.sum(w * np.abs(remaining) ** 2)))
    last = max(1, t.size // 10)
    tail = float(dist[-last - 1]) if t.size > last else float(dist[0])
    notes = []
    if tail > tol:
        notes.append(f"time integral not converged: tail estimate {tail:.2e}")
    return ScatteringResult(f_inf, t, dist, tail, tail <= tol, notes)
