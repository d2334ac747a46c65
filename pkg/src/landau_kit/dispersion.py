"""Linearized Volterra kernel, its Laplace transform, Penrose margins and roots.

Laplace convention: L[f](z) = int_0^inf exp(-z t) f(t) dt (no prefactor), so
time convolution becomes a plain product of transforms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import wofz

from ._parallel import pmap
from .equilibria import CustomEquilibrium, DoubleMaxwellian, Maxwellian, PoissonEquilibrium
from .errors import AccuracyError, DomainError

__all__ = [
    "InteractionKernel",
    "PenroseReport",
    "kernel_time",
    "kernel_laplace",
    "penrose_margin",
    "dispersion_root",
    "kernel_from_dict",
]


@dataclass(frozen=True)
class InteractionKernel:
    """Interaction potential W described by its Fourier symbol W_hat(k).

    The field acting on particles is E = -grad(W * rho), so ``sign=+1``
    Coulomb is repulsive (plasma) and ``sign=-1`` is attractive (gravity).
    ``table`` (custom kind) maps the integer |k|^2 to W_hat.
    """

    kind: str = "coulomb"
    sign: float = 1.0
    gamma: float = 2.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("coulomb", "screened", "power_law", "custom"):
            raise ValueError(f"unknown interaction kind {self.kind!r}")
        if self.sign not in (1.0, -1.0, 1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.kind == "power_law" and self.gamma <= 0:
            raise ValueError("power-law exponent must be positive")
        if self.kind == "custom" and not self.table:
            raise ValueError("custom interaction needs a table")

    @classmethod
    def coulomb(cls, sign=1.0):
        return cls("coulomb", float(sign))

    @classmethod
    def screened(cls, sign=1.0):
        return cls("screened", float(sign))

    @classmethod
    def power_law(cls, gamma, sign=1.0):
        return cls("power_law", float(sign), float(gamma))

    @classmethod
    def custom(cls, table):
        items = tuple(sorted((int(k), float(v)) for k, v in dict(table).items()))
        return cls("custom", 1.0, 2.0, items)

    def symbol(self, k, d=None):
        """W_hat at integer wavevector(s) ``k``; see ``_k2`` for the shape rule."""
        k2 = _k2(k, d)
        if np.any(k2 == 0):
            raise ValueError("the k = 0 mode carries no field")
        if self.kind == "coulomb":
            return self.sign / k2
        if self.kind == "screened":
            return self.sign / (1.0 + k2)
        if self.kind == "power_law":
            return self.sign * k2 ** (-self.gamma / 2)
        lookup = dict(self.table)
        flat = np.atleast_1d(np.rint(k2).astype(int))
        missing = [int(x) for x in flat if int(x) not in lookup]
        if missing:
            raise DomainError(f"custom interaction has no entry for |k|^2 = {missing[0]}")
        out = np.array([lookup[int(x)] for x in flat])
        return out.reshape(np.shape(k2)) if np.ndim(k2) else float(out[0])

    def coupling(self, k, d=None):
        """|k|^2 W_hat(k): the factor multiplying -t f0_hat(kt) in the kernel."""
        return _k2(k, d) * self.symbol(k, d)

    def decay(self):
        """(C, gamma) with |W_hat(k)| <= C |k|^-gamma on the lattice."""
        if self.kind == "coulomb":
            return 1.0, 2.0
        if self.kind == "screened":
            return 1.0, 2.0
        if self.kind == "power_law":
            return 1.0, self.gamma
        c = max(abs(v) * k for k, v in self.table)
        return c, 2.0

    def to_dict(self):
        out = {"kind": self.kind, "sign": self.sign}
        if self.kind == "power_law":
            out["gamma"] = self.gamma
        if self.kind == "custom":
            out = {"kind": "custom", "table": {str(k): v for k, v in self.table}}
        return out


def kernel_from_dict(data):
    data = dict(data)
    kind = data.get("kind", "coulomb")
    if kind == "custom":
        return InteractionKernel.custom(data["table"])
    return InteractionKernel(kind, float(data.get("sign", 1.0)), float(data.get("gamma", 2.0)))


def _k2(k, d=None):
    """|k|^2.  Tuples/lists are single wavevectors; arrays hold d = 1 modes
    unless ``d`` > 1 is given, in which case the last axis is the vector."""
    if d is None:
        d = len(k) if isinstance(k, (tuple, list)) else 1
    k = np.asarray(k, dtype=float)
    return k * k if d == 1 else np.sum(k * k, axis=-1)


def _knorm(k):
    return math.sqrt(float(_k2(k)))


def _check_k(k):
    if _knorm(k) == 0:
        raise ValueError("kernel undefined at k = 0 (no mean-mode field)")


def _eta_along(k, t):
    """Points k t for scalar or vector k and an array of times."""
    k = np.asarray(k, dtype=float)
    t = np.asarray(t, dtype=float)
    if k.ndim == 0:
        return k * t
    return t[..., None] * k


def kernel_time(spec, W, k, t):
    """Volterra kernel K(t,k) = -|k|^2 W_hat(k) t f0_hat(k t)."""
    _check_k(k)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("kernel defined for t >= 0")
    c = float(W.coupling(k))
    return -c * t * spec.fourier(_eta_along(k, t))


# --- Laplace transform ----------------------------------------------------


def _gaussian_laplace(weight, T, v0, k, z):
    """int_0^inf t exp(-z t) n exp(-i k.v0 t - T|k|^2 t^2 / 2) dt (closed form)."""
    a = 0.5 * T * float(_k2(k))
    kv = float(np.dot(np.atleast_1d(k), np.atleast_1d(v0)))
    zeta = z + 1j * kv
    # int exp(-zeta t - a t^2) dt = sqrt(pi/a)/2 * w(i zeta / (2 sqrt a))
    with np.errstate(over="ignore", invalid="ignore"):
        j0 = 0.5 * math.sqrt(math.pi / a) * wofz(1j * zeta / (2.0 * math.sqrt(a)))
        return weight * (1.0 - zeta * j0) / (2.0 * a)


def _closed_form(spec, k, z):
    if isinstance(spec, (Maxwellian, DoubleMaxwellian)):
        total = 0.0
        for n, T, v0 in spec.gaussian_components():
            total = total + _gaussian_laplace(n, T, v0, k, z)
        return total
    if isinstance(spec, PoissonEquilibrium):
        kk = _knorm(k)
        u = 1.0 / (z + kk)
        if spec.exponent == 1:
            return spec.n0 * u * u
        return spec.n0 * (u * u + 2.0 * kk * u**3)
    return None


_GL16 = np.polynomial.legendre.leggauss(16)
_GL24 = np.polynomial.legendre.leggauss(24)


def _panel_sums(spec, k, z, t0, length, count, rule):
    x, w = rule
    starts = t0 + length * np.arange(count)
    t = starts[:, None] + 0.5 * length * (x + 1.0)
    vals = t * np.exp(-z * t) * spec.fourier(_eta_along(k, t))
    return 0.5 * length * (vals @ w), 0.5 * length * (np.abs(vals) @ w)


def _quadrature(spec, k, z, tol=1e-9, max_panels=200_000):
    kk = _knorm(k)
    length = 1.0 / max(kk * math.sqrt(max(getattr(spec, "T", 1.0), 1e-6)), abs(z.imag), 1.0)
    total16 = total24 = 0j
    t0 = 0.0
    used = 0
    batch = 64
    while used < max_panels:
        s16, mag = _panel_sums(spec, k, z, t0, length, batch, _GL16)
        s24, _ = _panel_sums(spec, k, z, t0, length, batch, _GL24)
        total16 += s16.sum()
        total24 += s24.sum()
        used += batch
        t0 += batch * length
        scale = max(abs(total24), 1e-300)
        if np.all(mag[-8:] < 1e-17 * max(scale, 1.0)):
            break
    else:
        raise AccuracyError("Laplace integrand did not decay within panel budget", residual=math.inf)
    residual = abs(total24 - total16)
    if residual > tol * max(1.0, abs(total24)):
        raise AccuracyError(f"Laplace quadrature residual {residual:.3e}", residual=residual)
    return total24


def kernel_laplace(spec, W, k, z, method="auto"):
    """Laplace transform of the kernel at complex ``z`` (scalar or array).

    ``method`` is "auto" (closed form when one exists), "closed" or
    "quadrature".  Raises DomainError when Re z <= -lambda0 |k|.
    """
    _check_k(k)
    z_arr = np.asarray(z, dtype=complex)
    kk = _knorm(k)
    lam0 = spec.lambda0
    if math.isfinite(lam0) and np.any(z_arr.real <= -lam0 * kk):
        raise DomainError(f"Re z must exceed {-lam0 * kk:g} for this equilibrium")
    c = float(W.coupling(k))
    if spec.n0 == 0:
        return np.zeros_like(z_arr) if z_arr.ndim else 0j
    inner = None
    if method in ("auto", "closed"):
        inner = _closed_form(spec, k, z_arr)
        if inner is None and method == "closed":
            raise ValueError("no closed form for this equilibrium")
    if inner is None:
        flat = z_arr.reshape(-1)
        inner = np.array([_quadrature(spec, k, complex(zz)) for zz in flat]).reshape(z_arr.shape)
    out = -c * inner
    return out if z_arr.ndim else complex(out)


# --- Penrose margin ---------------------------------------------------------


@dataclass
class PenroseReport:
    k: list
    kappa_k: np.ndarray
    kappa: float
    delta: float
    omega_max: float
    n_omega: int
    stable: bool
    roots: list = field(default_factory=list)
    zero_count: list = field(default_factory=list)
    converged: bool = True
    warnings: list = field(default_factory=list)

    def rows(self):
        """(k, kappa_k, root_re, root_im) rows for tabular output."""
        out = []
        for kk, kap, r in zip(self.k, self.kappa_k, self.roots):
            re, im = (math.nan, math.nan) if r is None else (r.real, r.imag)
            out.append((kk, float(kap), re, im))
        return out


def _contour_values(spec, W, k, shift, omega):
    z = -shift * _knorm(k) + 1j * omega
    return 1.0 - kernel_laplace(spec, W, k, z)


def _zero_count(D):
    """Zeros of D to the right of an upward line, from the phase change."""
    phase = np.unwrap(np.angle(D))
    return int(round(-(phase[-1] - phase[0]) / (2 * math.pi)))


def _margin_one_k(spec, W, k, shift, omega_max, n_omega):
    j = np.arange(-n_omega, n_omega + 1)
    omega = omega_max * j / n_omega
    D = _contour_values(spec, W, k, shift, omega)
    absD = np.abs(D)
    zeros = _zero_count(D)
    kk = _knorm(k)
    # Tail: |K~| <= C / (1 + k^2 + w^2) beyond the truncation.
    Ktil = np.abs(1.0 - D)
    c_est = float(np.max(Ktil * (1.0 + kk * kk + omega**2)))
    tail = 1.0 - c_est / (1.0 + kk * kk + omega_max**2)

    def refined(abs_vals, om):
        i = int(np.argmin(abs_vals))
        best = float(abs_vals[i])
        lo, hi = om[max(i - 1, 0)], om[min(i + 1, om.size - 1)]
        if hi > lo:
            res = minimize_scalar(
                lambda w: abs(complex(_contour_values(spec, W, k, shift, w))),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-12},
            )
            best = min(best, float(res.fun))
        return best, om[i]

    fine_min, w_min = refined(absD, omega)
    coarse_min, _ = refined(absD[::2], omega[::2])
    kappa = 0.0 if zeros >= 1 else min(fine_min, tail)
    kappa_coarse = 0.0 if zeros >= 1 else min(coarse_min, tail)
    return kappa, kappa_coarse, zeros, complex(-shift * kk, w_min)


def _max_stable_shift(spec, W, k, omega_max, n_omega, cap=2.0):
    """Largest shift delta (bisection) with no zeros right of Re z = -delta|k|."""
    hi = cap
    if math.isfinite(spec.lambda0):
        hi = min(hi, 0.999 * spec.lambda0)

    def has_zero(shift):
        D = _contour_values(spec, W, k, shift, omega_max * np.arange(-n_omega, n_omega + 1) / n_omega)
        return _zero_count(D) >= 1 or float(np.min(np.abs(D))) < 1e-8

    if has_zero(0.0):
        return 0.0
    if not has_zero(hi):
        return hi
    lo = 0.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if has_zero(mid):
            hi = mid
        else:
            lo = mid
    return lo


def penrose_margin(spec, W, k_range, delta=0.0, omega_max=64.0, n_omega=4096, refine_tol=1e-6):
    """Approximate inf |1 - K~(z,k)| over Re z >= -delta |k| for each k.

    The infimum is taken on the boundary line Re z = -delta |k| sampled at
    ``2 n_omega + 1`` equispaced frequencies in [-omega_max, omega_max], with
    the sampled minimum refined by bounded scalar minimization.  A mode whose
    boundary curve winds around 0 encloses a zero and gets margin 0.  The
    part of the line beyond ``omega_max`` is covered by the decay bound
    C/(1 + |k|^2 + w^2).  ``delta=None`` picks half of the largest stable
    shift common to all k.
    """
    ks = list(k_range)
    if not ks:
        raise ValueError("empty k range")
    for k in ks:
        _check_k(k)
    notes = []
    if delta is None:
        shifts = pmap(lambda k: _max_stable_shift(spec, W, k, omega_max, n_omega), ks)
        delta = 0.5 * min(shifts)
    if delta < 0:
        raise ValueError("contour shift must be non-negative")
    if math.isfinite(spec.lambda0) and delta >= spec.lambda0:
        raise DomainError("contour shift must stay below the analyticity rate")
    results = pmap(lambda k: _margin_one_k(spec, W, k, delta, omega_max, n_omega), ks)
    kappa_k = np.array([r[0] for r in results])
    coarse = np.array([r[1] for r in results])
    zeros = [r[2] for r in results]
    converged = bool(np.all(np.abs(kappa_k - coarse) <= refine_tol))
    if not converged:
        msg = f"margin not converged under contour refinement (change {np.max(np.abs(kappa_k - coarse)):.2e})"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    roots = []
    for k, r in zip(ks, results):
        roots.append(_nearest_root(spec, W, k, r[3], delta, unstable=r[2] >= 1))
    kappa = float(np.min(kappa_k))
    return PenroseReport(
        ks, kappa_k, kappa, float(delta), float(omega_max), int(n_omega),
        kappa > 0, roots, zeros, converged, notes,
    )


def _nearest_root(spec, W, k, start, delta, unstable):
    kk = _knorm(k)
    floor = -delta * kk if unstable else None
    lo = -spec.lambda0 * kk if floor is None else floor
    if unstable:
        ys = (0.0, start.imag, 0.5 * start.imag, -start.imag)
        xs = tuple(lo + x * (1.0 + kk) for x in (0.05, 0.2, 0.5, 1.0))
        grids = [[complex(x, y) for x in xs for y in ys]]
    else:
        offsets = (0.5, 1.0, 0.0, -0.5, -1.0, -2.0, -3.0)
        grids = [
            [complex(start.real + dx, start.imag * scale) for dx in offsets]
            for scale in (1.0, 0.8, 1.25)
        ]
    found = []
    for grid in grids:
        for g in grid:
            if not g.real > lo:
                continue
            r = dispersion_root(spec, W, k, g, re_min=floor)
            if r is not None:
                found.append(r)
        if found:
            break
    if not found:
        return None
    # the least damped root is the one controlling the long-time behaviour
    return max(found, key=lambda r: (round(r.real, 8), abs(r.imag)))


# --- Root finding -----------------------------------------------------------


def dispersion_root(spec, W, k, z_guess, tol=1e-10, max_iter=100, re_min=None, trace=None):
    """Secant iteration for a zero of z -> 1 - K~(z,k).

    Returns the root, or None when the iteration stalls, leaves the region
    Re z > ``re_min`` (default: the analyticity boundary) or exhausts
    ``max_iter``.  Iterates are appended to ``trace`` when a list is given.
    """
    _check_k(k)
    kk = _knorm(k)
    floor = -spec.lambda0 * kk if re_min is None else re_min
    if spec.n0 == 0:
        return None

    def D(z):
        return 1.0 - kernel_laplace(spec, W, k, z)

    z0 = complex(z_guess)
    if not z0.real > floor:
        raise DomainError("initial guess outside the admissible region")
    z1 = z0 + 1e-3 * (1.0 + abs(z0)) * (1 + 1j)
    try:
        f0, f1 = D(z0), D(z1)
    except (DomainError, AccuracyError):
        return None
    for _ in range(max_iter):
        if trace is not None:
            trace.append((z1, abs(f1)))
        if abs(f1) < tol:
            return z1
        denom = f1 - f0
        if denom == 0 or not np.isfinite(denom):
            return None
        step = -f1 * (z1 - z0) / denom
        cap = 0.5 * (1.0 + abs(z1))
        if abs(step) > cap:
            step *= cap / abs(step)
        z2 = z1 + step
        if not np.isfinite(z2) or not z2.real > floor:
            return None
        try:
            f2 = D(z2)
        except (DomainError, AccuracyError):
            return None
        if not np.isfinite(f2):
            return None
        z0, f0, z1, f1 = z1, f1, z2, f2
    return z1 if abs(f1) < tol else None
