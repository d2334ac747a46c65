"""Homogeneous equilibria f0(v) and their velocity Fourier transforms.

Convention used everywhere in the package::

    f0_hat(eta) = integral exp(-i v . eta) f0(v) dv

with no (2 pi) prefactor, so ``f0_hat(0) == n0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import AccuracyError, OutOfRangeError

__all__ = [
    "Maxwellian",
    "DoubleMaxwellian",
    "PoissonEquilibrium",
    "CustomEquilibrium",
    "AnalyticityReport",
    "eval_equilibrium",
    "fourier_equilibrium",
    "verify_analyticity_bound",
    "equilibrium_from_dict",
]


def _points(x, d):
    """Return ``x`` as an array of points; trailing axis of length d if d > 1."""
    x = np.asarray(x, dtype=float)
    if d == 1:
        return x
    if x.shape[-1:] != (d,):
        raise ValueError(f"expected trailing axis of length {d}, got shape {x.shape}")
    return x


def _sqnorm(x, d):
    return x * x if d == 1 else np.sum(x * x, axis=-1)


def _vec(v0, d):
    if d == 1:
        return float(v0)
    arr = np.zeros(d) if np.isscalar(v0) and v0 == 0 else np.asarray(v0, dtype=float)
    if arr.shape != (d,):
        raise ValueError(f"center velocity must have {d} components")
    return arr


@dataclass(frozen=True)
class Maxwellian:
    """n0 (2 pi T)^(-d/2) exp(-|v - v0|^2 / 2T)."""

    n0: float = 1.0
    T: float = 1.0
    v0: float | tuple = 0.0
    d: int = 1

    def __post_init__(self):
        if not 1 <= self.d <= 3:
            raise ValueError("dimension must be 1, 2 or 3")
        if self.T <= 0:
            raise ValueError("temperature must be positive")
        if self.n0 < 0:
            raise ValueError("density must be non-negative")
        if self.d > 1 and not isinstance(self.v0, tuple):
            object.__setattr__(self, "v0", tuple(np.broadcast_to(self.v0, (self.d,)).tolist()))

    kind = "maxwellian"
    lambda0 = math.inf

    @property
    def thermal_width(self):
        return math.sqrt(self.T)

    @property
    def v_extent(self):
        """Largest |v| carrying non-negligible mass (8 thermal widths)."""
        return float(np.max(np.abs(self.v0))) + 8.0 * self.thermal_width

    def gaussian_components(self):
        return [(self.n0, self.T, _vec(self.v0, self.d))]

    def __call__(self, v):
        v = _points(v, self.d)
        dv = v - _vec(self.v0, self.d)
        norm = self.n0 / (2.0 * math.pi * self.T) ** (self.d / 2)
        return norm * np.exp(-_sqnorm(dv, self.d) / (2.0 * self.T))

    def fourier(self, eta):
        eta = _points(eta, self.d)
        v0 = _vec(self.v0, self.d)
        phase = eta * v0 if self.d == 1 else eta @ v0
        return self.n0 * np.exp(-1j * phase - 0.5 * self.T * _sqnorm(eta, self.d))

    def fourier_parts(self, eta):
        """Return (f_hat, gradient, Hessian) of the transform, complex-valued."""
        eta = _points(eta, self.d)
        f = self.fourier(eta)
        v0 = _vec(self.v0, self.d)
        g = -1j * v0 - self.T * eta
        if self.d == 1:
            return f, g * f, (g * g - self.T) * f
        hess = g[..., :, None] * g[..., None, :] - self.T * np.eye(self.d)
        return f, g * f[..., None], hess * f[..., None, None]

    def to_dict(self):
        v0 = list(self.v0) if isinstance(self.v0, tuple) else self.v0
        return {"kind": self.kind, "n0": self.n0, "T": self.T, "v0": v0, "d": self.d}


@dataclass(frozen=True)
class DoubleMaxwellian:
    """Sum of two Maxwellian components (two-stream backgrounds)."""

    first: Maxwellian
    second: Maxwellian

    kind = "double_maxwellian"
    lambda0 = math.inf

    def __post_init__(self):
        if self.first.d != self.second.d:
            raise ValueError("components must share a dimension")

    @classmethod
    def two_stream(cls, n0=1.0, T=1.0, u=1.0, d=1):
        """Symmetric beams centered at +u and -u, each carrying n0/2."""
        if d == 1:
            plus, minus = u, -u
        else:
            plus = (u,) + (0.0,) * (d - 1)
            minus = (-u,) + (0.0,) * (d - 1)
        return cls(Maxwellian(n0 / 2, T, plus, d), Maxwellian(n0 / 2, T, minus, d))

    @property
    def d(self):
        return self.first.d

    @property
    def n0(self):
        return self.first.n0 + self.second.n0

    @property
    def v_extent(self):
        return max(self.first.v_extent, self.second.v_extent)

    def gaussian_components(self):
        return self.first.gaussian_components() + self.second.gaussian_components()

    def __call__(self, v):
        return self.first(v) + self.second(v)

    def fourier(self, eta):
        return self.first.fourier(eta) + self.second.fourier(eta)

    def fourier_parts(self, eta):
        a = self.first.fourier_parts(eta)
        b = self.second.fourier_parts(eta)
        return tuple(x + y for x, y in zip(a, b))

    def to_dict(self):
        return {
            "kind": self.kind,
            "components": [self.first.to_dict(), self.second.to_dict()],
        }


@dataclass(frozen=True)
class PoissonEquilibrium:
    """Normalized algebraic background c / (1 + v^2)^p in one dimension.

    ``exponent=1`` is the Lorentzian with transform n0 exp(-|eta|), the case
    whose Volterra kernel is alpha t exp(-lambda t).  ``exponent=2`` is the
    (1 + v^2)^-2 profile with transform n0 (1 + |eta|) exp(-|eta|).
    """

    n0: float = 1.0
    exponent: int = 1
    d: int = 1

    kind = "poisson"
    lambda0 = 1.0

    def __post_init__(self):
        if self.d != 1:
            raise ValueError("the Poisson family is implemented for d = 1 only")
        if self.exponent not in (1, 2):
            raise ValueError("exponent must be 1 or 2")
        if self.n0 < 0:
            raise ValueError("density must be non-negative")

    @property
    def c(self):
        return self.n0 / math.pi if self.exponent == 1 else 2.0 * self.n0 / math.pi

    @property
    def v_extent(self):
        return math.inf

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return self.c / (1.0 + v * v) ** self.exponent

    def fourier(self, eta):
        a = np.abs(np.asarray(eta, dtype=float))
        if self.exponent == 1:
            return (self.n0 * np.exp(-a)).astype(complex)
        return (self.n0 * (1.0 + a) * np.exp(-a)).astype(complex)

    def fourier_parts(self, eta):
        eta = np.asarray(eta, dtype=float)
        a = np.abs(eta)
        e = self.n0 * np.exp(-a)
        if self.exponent == 1:
            return e.astype(complex), (-np.sign(eta) * e).astype(complex), e.astype(complex)
        return (
            ((1.0 + a) * e).astype(complex),
            (-eta * e).astype(complex),
            ((a - 1.0) * e).astype(complex),
        )

    def to_dict(self):
        return {"kind": self.kind, "n0": self.n0, "exponent": self.exponent, "d": 1}


@dataclass(frozen=True, eq=False)
class CustomEquilibrium:
    """Tabulated one-dimensional background on a uniform velocity grid.

    The table is taken as compactly supported: values outside the grid are
    treated as zero by the transform but evaluating there is an error.
    """

    v: np.ndarray
    values: np.ndarray
    lambda0: float = math.inf
    atol: float = 1e-10
    _spline: CubicSpline = field(init=False, repr=False)

    kind = "custom"
    d = 1

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        f = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.shape != f.shape or v.size < 8:
            raise ValueError("need matching 1-D velocity grid and values (>= 8 points)")
        dv = np.diff(v)
        if not np.allclose(dv, dv[0], rtol=1e-9, atol=0):
            raise ValueError("velocity grid must be uniform")
        if np.any(f < 0):
            raise ValueError("equilibrium values must be non-negative")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "values", f)
        object.__setattr__(self, "_spline", CubicSpline(v, f))

    @classmethod
    def tabulate(cls, spec, v_max=None, n_v=2049, **kwargs):
        """Tabulate a closed-form spec on [-v_max, v_max] (default 8 widths)."""
        if spec.d != 1:
            raise ValueError("tabulation is one-dimensional")
        if v_max is None:
            v_max = spec.v_extent
        v = np.linspace(-v_max, v_max, n_v)
        return cls(v, spec(v), **kwargs)

    @property
    def dv(self):
        return float(self.v[1] - self.v[0])

    @property
    def n0(self):
        return float(np.trapezoid(self.values, self.v))

    @property
    def v_extent(self):
        return float(np.max(np.abs(self.v)))

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        lo, hi = self.v[0], self.v[-1]
        if np.any((v < lo - 1e-12) | (v > hi + 1e-12)):
            raise OutOfRangeError(f"velocity outside tabulated range [{lo}, {hi}]")
        return np.maximum(self._spline(v), 0.0)

    def _moment_transform(self, eta, power, stride=1):
        v = self.v[::stride]
        f = self.values[::stride]
        w = np.full(v.size, self.dv * stride)
        w[0] *= 0.5
        w[-1] *= 0.5
        eta = np.asarray(eta, dtype=float)
        weights = w * f * (-1j * v) ** power
        return np.exp(-1j * np.multiply.outer(eta, v)) @ weights

    def _checked(self, eta, power):
        fine = self._moment_transform(eta, power)
        if (self.v.size - 1) % 2 == 0:
            coarse = self._moment_transform(eta, power, stride=2)
            residual = float(np.max(np.abs(fine - coarse), initial=0.0))
            if residual > self.atol:
                raise AccuracyError(
                    f"tabulated transform not converged (residual {residual:.3e})",
                    residual=residual,
                )
        return fine

    def fourier(self, eta):
        return self._checked(eta, 0)

    def fourier_parts(self, eta):
        return self._checked(eta, 0), self._checked(eta, 1), self._checked(eta, 2)

    def to_dict(self):
        return {
            "kind": self.kind,
            "v": self.v.tolist(),
            "values": self.values.tolist(),
            "lambda0": None if math.isinf(self.lambda0) else self.lambda0,
        }


def eval_equilibrium(spec, v):
    """Value of f0 at velocity ``v`` (array-friendly)."""
    return spec(v)


def fourier_equilibrium(spec, eta):
    """Velocity transform f0_hat(eta) = int exp(-i v eta) f0(v) dv."""
    return spec.fourier(eta)


@dataclass(frozen=True)
class AnalyticityReport:
    holds: bool
    worst_margin: float
    constant: float
    lambda0: float


def verify_analyticity_bound(spec, lambda0, eta_samples, cap=1e8):
    """Check |f0_hat| + |grad f0_hat| + |hess f0_hat| <= C exp(-lambda0 |eta|).

    ``constant`` is the best C over the samples; the bound is accepted when
    C <= ``cap``.  ``worst_margin`` is min over samples of
    1 - lhs exp(lambda0 |eta|) / cap, so it is non-negative exactly when the
    bound holds.  Work is done in log space to survive huge rates.
    """
    eta = np.asarray(eta_samples, dtype=float)
    if eta.size == 0:
        raise ValueError("need at least one eta sample")
    if lambda0 <= 0:
        raise ValueError("rate must be positive")
    if spec.d == 1:
        eta = eta.reshape(-1)
        mag = np.abs(eta)
    else:
        eta = eta.reshape(-1, spec.d)
        mag = np.linalg.norm(eta, axis=-1)
    f, g, h = spec.fourier_parts(eta)
    if spec.d == 1:
        lhs = np.abs(f) + np.abs(g) + np.abs(h)
    else:
        lhs = (
            np.abs(f)
            + np.linalg.norm(g, axis=-1)
            + np.sqrt(np.sum(np.abs(h) ** 2, axis=(-2, -1)))
        )
    with np.errstate(divide="ignore"):
        log_ratio = np.log(lhs) + lambda0 * mag
    log_c = float(np.max(log_ratio))
    log_cap = math.log(cap)
    constant = math.exp(log_c) if log_c < 700 else math.inf
    # 1 - exp(log_ratio - log_cap), guarded against overflow
    worst = float(np.min(-np.expm1(np.minimum(log_ratio - log_cap, 700.0))))
    return AnalyticityReport(log_c <= log_cap, worst, constant, float(lambda0))


def equilibrium_from_dict(data):
    """Build an equilibrium from its config dictionary."""
    data = dict(data)
    kind = data.pop("kind", None)
    if kind == "maxwellian":
        d = int(data.get("d", 1))
        v0 = data.get("v0", 0.0)
        if d > 1:
            v0 = tuple(np.broadcast_to(np.asarray(v0, dtype=float), (d,)).tolist())
        return Maxwellian(float(data.get("n0", 1.0)), float(data.get("T", 1.0)), v0, d)
    if kind == "double_maxwellian":
        if "components" in data:
            a, b = (equilibrium_from_dict(c) for c in data["components"])
            return DoubleMaxwellian(a, b)
        return DoubleMaxwellian.two_stream(
            float(data.get("n0", 1.0)),
            float(data.get("T", 1.0)),
            float(data.get("u", 1.0)),
            int(data.get("d", 1)),
        )
    if kind == "poisson":
        return PoissonEquilibrium(float(data.get("n0", 1.0)), int(data.get("exponent", 1)))
    if kind == "custom":
        lam = data.get("lambda0")
        return CustomEquilibrium(
            np.asarray(data["v"]),
            np.asarray(data["values"]),
            math.inf if lam is None else float(lam),
        )
    raise ValueError(f"unknown equilibrium kind {kind!r}")
