"""Scalar Volterra equations rho = H + K * rho and their resolvents."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StabilityError, StepSizeError, TruncationError

__all__ = [
    "VolterraProblem",
    "solve_volterra",
    "resolvent_closed_form",
    "resolvent_bromwich",
    "apply_resolvent",
    "convolve_trapezoid",
]


@dataclass(frozen=True, eq=False)
class VolterraProblem:
    """Samples of H and K on the grid t_j = j dt, j = 0..n_t."""

    dt: float
    H: np.ndarray
    K: np.ndarray
    R: np.ndarray | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        H = np.asarray(self.H)
        K = np.asarray(self.K)
        if H.ndim != 1 or H.shape != K.shape or H.size < 1:
            raise ValueError("H and K must be 1-D arrays of equal length")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "K", K)

    @property
    def n_t(self):
        return self.H.size - 1

    @property
    def t(self):
        return self.dt * np.arange(self.H.size)


def solve_volterra(p: VolterraProblem):
    """Product-trapezoid march, implicit in the diagonal term.

    rho_n (1 - dt K_0 / 2) = H_n + dt (K_n rho_0 / 2 + sum_{j=1}^{n-1} K_{n-j} rho_j)
    """
    H, K, dt = p.H, p.K, p.dt
    if not np.any(K):
        return H.copy()
    diag = 1.0 - 0.5 * dt * K[0]
    if abs(diag) < 1e-12:
        raise StepSizeError("1 - dt K(0)/2 vanishes; reduce the step")
    dtype = np.result_type(H, K, float)
    rho = np.zeros(H.size, dtype=dtype)
    rho[0] = H[0]
    for n in range(1, H.size):
        acc = 0.5 * K[n] * rho[0]
        if n > 1:
            acc = acc + np.dot(K[n - 1:0:-1], rho[1:n])
        rho[n] = (H[n] + dt * acc) / diag
    return rho


def resolvent_closed_form(alpha, lam, t_grid):
    """Resolvent of K(t) = alpha t exp(-lam t).

    alpha < 0:  R = -sqrt(-alpha) exp(-lam t) sin(sqrt(-alpha) t)
    alpha > 0:  R = +sqrt(alpha) exp(-lam t) sinh(sqrt(alpha) t)
    Both follow from R~ = K~ / (1 - K~) with K~ = alpha / (z + lam)^2.
    """
    if alpha == 0:
        raise ValueError("alpha = 0 has zero kernel; no resolvent needed")
    if lam < 0:
        raise ValueError("decay rate must be non-negative")
    t = np.asarray(t_grid, dtype=float)
    damp = np.exp(-lam * t)
    if alpha < 0:
        w = math.sqrt(-alpha)
        return -w * damp * np.sin(w * t)
    w = math.sqrt(alpha)
    return w * damp * np.sinh(w * t)


def convolve_trapezoid(a, b, dt):
    """c_n = trapezoid approximation of int_0^{t_n} a(t_n - s) b(s) ds."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = a.size
    full = np.convolve(a, b)[:n]
    edge = 0.5 * (a * b[0] + a[0] * b)
    edge[0] = a[0] * b[0]
    return dt * (full - edge)


def apply_resolvent(R, H, dt):
    """rho = H + R * H by trapezoidal convolution."""
    R = np.asarray(R)
    H = np.asarray(H)
    if R.shape != H.shape or R.ndim != 1:
        raise ValueError("R and H must be 1-D arrays of equal length")
    if not np.any(R):
        return H.copy()
    return H + convolve_trapezoid(R, H, dt)


def _tail_terms(F, z, a, n_terms=3, n_fit=12):
    """Fit F(z) ~ sum_{m=2}^{n_terms+1} c_m (z - a)^-m on the largest |Im z| samples."""
    idx = np.argsort(-np.abs(z.imag))[:n_fit]
    u = 1.0 / (z[idx] - a)
    powers = np.arange(2, 2 + n_terms)
    A = u[:, None] ** powers[None, :]
    coef, *_ = np.linalg.lstsq(A, F[idx], rcond=None)
    return powers, coef


def resolvent_bromwich(
    Ktilde,
    gamma,
    t_grid,
    omega_max=None,
    n_omega=2**14,
    margin_floor=1e-3,
    tail_tol=1e-8,
    real=None,
):
    """Resolvent R(t) from R~ = K~/(1 - K~) by trapezoid rule on Re z = gamma.

    The leading large-|z| behaviour c_m (z - a)^-m (m = 2, 3, 4) is fitted
    from the samples, inverted exactly (c_m t^(m-1) e^(a t) / (m-1)!) and
    subtracted, which leaves an O(|z|^-5) integrand whose truncation tail
    is bounded from the outermost residual.  The step is set so that the
    aliasing period exceeds 4 max(t) (and at least 40).

    ``Ktilde`` must accept an array of complex z.  Raises StabilityError if
    |1 - K~| drops below ``margin_floor`` on the line or the line has zeros
    of 1 - K~ to its right, and TruncationError if the tail bound exceeds
    ``tail_tol``.
    """
    t = np.asarray(t_grid, dtype=float)
    t_max = float(np.max(t)) if t.size else 0.0
    if omega_max is None:
        period = max(4.0 * t_max, 40.0)
        h = 2.0 * math.pi / period
        omega_max = h * n_omega / 2
    else:
        h = 2.0 * omega_max / n_omega
        if 2.0 * math.pi / h < 2.0 * t_max:
            raise ValueError("frequency step too coarse for the requested times")
    j = np.arange(-(n_omega // 2), n_omega // 2 + 1)
    omega = h * j
    z = gamma + 1j * omega
    K = np.asarray(Ktilde(z), dtype=complex) * np.ones_like(z)
    if not np.any(K):
        return np.zeros_like(t)
    D = 1.0 - K
    if float(np.min(np.abs(D))) < margin_floor:
        raise StabilityError(f"|1 - K~| = {np.min(np.abs(D)):.2e} on the contour")
    winding = -(np.unwrap(np.angle(D))[-1] - np.angle(D[0])) / (2 * math.pi)
    if round(winding) >= 1:
        raise StabilityError("1 - K~ has zeros to the right of the contour")
    F = K / D
    if real is None:
        real = bool(np.allclose(F[::-1], np.conj(F), rtol=1e-10, atol=1e-14))
    a = gamma - 1.0
    powers, coef = _tail_terms(F, z, a)
    u = 1.0 / (z - a)
    resid = F - (u[:, None] ** powers[None, :]) @ coef
    # residual decays like |w|^-5: integral beyond omega_max ~ |res| omega_max / 4 per side
    tail = float(np.max(np.abs(resid[[0, -1]]))) * omega_max / (2.0 * math.pi) / 2.0
    growth = math.exp(gamma * t_max) if gamma > 0 else 1.0
    if tail * growth > tail_tol:
        raise TruncationError(f"contour tail estimate {tail * growth:.2e} exceeds {tail_tol:.0e}")
    weights = np.full(omega.size, h / (2.0 * math.pi))
    weights[0] *= 0.5
    weights[-1] *= 0.5
    wres = weights * resid
    out = np.empty(t.size, dtype=complex)
    chunk = max(1, 2**22 // omega.size)
    for s in range(0, t.size, chunk):
        tt = t[s:s + chunk]
        out[s:s + chunk] = np.exp(np.outer(tt, z)) @ wres
    fact = np.array([math.factorial(m - 1) for m in powers], dtype=float)
    out += (t[:, None] ** (powers - 1)[None, :] / fact) @ coef * np.exp(a * t)
    return out.real if real else out
