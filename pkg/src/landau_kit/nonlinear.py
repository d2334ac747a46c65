"""Nonlinear Vlasov-Poisson by Strang-split spectral advection, plus echo runs.

Layout of the distribution F: shape (n_x, n_v) for d = 1 and
(n_x, n_x, n_v, n_v) for d = 2, with x in [0, 2 pi) and v in [-v_max, v_max).
Each substep is an exact phase shift in the dual variable of the
advected coordinate.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from ._parallel import worker_count
from .equilibria import Maxwellian
from .errors import NumericalError
from .linear import PhaseSpaceGrid, SpectralField

__all__ = [
    "SimState",
    "ModeSpec",
    "InitialData",
    "SimConfig",
    "Trajectory",
    "EchoReport",
    "field_solve",
    "step",
    "conserved_quantities",
    "initial_state",
    "spectral_initial_data",
    "simulate",
    "detect_bursts",
    "echo_experiment",
    "echo_chain_prediction",
    "write_checkpoint",
    "read_checkpoint",
    "reverse_velocity",
]

_MAGIC = b"LDKF"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIIdd")
BOUNDARY_FRACTION = 0.95
BOUNDARY_TOL = 1e-8


@dataclass
class SimState:
    F: np.ndarray
    t: float = 0.0
    E: np.ndarray | None = None
    steps: int = 0


def _x_axes(d):
    return tuple(range(d))


def _v_axes(d):
    return tuple(range(d, 2 * d))


def _x_wavenumbers(grid):
    """Integer wavenumbers matching rfftn over the x axes (last one halved)."""
    n = grid.n_x
    full = np.fft.fftfreq(n, 1.0 / n)
    half = np.fft.rfftfreq(n, 1.0 / n)
    if grid.d == 1:
        return [half]
    return [full[:, None], half[None, :]]


def _nyquist_mask(grid):
    n = grid.n_x
    if grid.d == 1:
        m = np.ones(n // 2 + 1)
        m[-1] = 0.0
        return m
    full = np.ones(n)
    full[n // 2] = 0.0
    half = np.ones(n // 2 + 1)
    half[-1] = 0.0
    return full[:, None] * half[None, :]


def _density(F, grid):
    return F.sum(axis=_v_axes(grid.d)) * grid.dv**grid.d


def _symbol_on_grid(W, ks, d):
    k2 = sum(k * k for k in ks) if d > 1 else ks[0] ** 2
    sym = np.zeros(np.shape(k2))
    nz = k2 != 0
    if d == 1:
        sym[nz] = W.symbol(ks[0][nz])
    else:
        kk = np.stack(np.broadcast_arrays(*ks), axis=-1)
        sym[nz] = W.symbol(kk[nz], d=d)
    return sym


def field_solve(F, W, grid: PhaseSpaceGrid, n0=0.0):
    """Acceleration E = -grad(W * (rho - n0)) on the x grid.

    Returns shape (n_x,) for d = 1 and (2, n_x, n_x) for d = 2.
    """
    d = grid.d
    rho = _density(F, grid) - n0
    rho_k = sfft.rfftn(rho, axes=_x_axes(d), workers=worker_count())
    ks = _x_wavenumbers(grid)
    phi_k = _symbol_on_grid(W, ks, d) * rho_k * _nyquist_mask(grid)
    if d == 1:
        return sfft.irfft(-1j * ks[0] * phi_k, n=grid.n_x)
    comps = [
        sfft.irfftn(-1j * kc * phi_k, s=(grid.n_x,) * 2, axes=(0, 1)) for kc in ks
    ]
    return np.stack(comps)


def _potential(F, W, grid):
    d = grid.d
    rho = _density(F, grid)
    rho_k = sfft.rfftn(rho, axes=_x_axes(d))
    phi_k = _symbol_on_grid(W, _x_wavenumbers(grid), d) * rho_k * _nyquist_mask(grid)
    phi = sfft.irfftn(phi_k, s=(grid.n_x,) * d, axes=_x_axes(d))
    return rho, phi


def _velocities(grid):
    v = grid.v
    if grid.d == 1:
        return [v]
    return [v[:, None], v[None, :]]


def _advect_x(F, grid, tau):
    d = grid.d
    Fk = sfft.rfftn(F, axes=_x_axes(d), workers=worker_count())
    ks = _x_wavenumbers(grid)
    vs = _velocities(grid)
    if d == 1:
        phase = ks[0][:, None] * vs[0][None, :]
    else:
        phase = (
            ks[0][:, :, None, None] * vs[0][None, None, :, :]
            + ks[1][:, :, None, None] * vs[1][None, None, :, :]
        )
    mask = _nyquist_mask(grid)
    mask = mask[..., None] if d == 1 else mask[..., None, None]
    Fk *= np.exp(-1j * tau * phase) * mask
    return sfft.irfftn(Fk, s=(grid.n_x,) * d, axes=_x_axes(d), workers=worker_count())


def _v_frequencies(grid):
    n = grid.n_v
    full = 2 * math.pi * np.fft.fftfreq(n, grid.dv)
    half = 2 * math.pi * np.fft.rfftfreq(n, grid.dv)
    full[n // 2] = 0.0
    if grid.d == 1:
        return [half]
    return [full[:, None], half[None, :]]


def _v_nyquist(grid):
    n = grid.n_v
    half = np.ones(n // 2 + 1)
    half[-1] = 0.0
    if grid.d == 1:
        return half
    full = np.ones(n)
    full[n // 2] = 0.0
    return full[:, None] * half[None, :]


def _filter(grid):
    eta_max = math.pi / grid.dv
    etas = _v_frequencies(grid)
    mag = np.abs(etas[0]) if grid.d == 1 else np.sqrt(etas[0] ** 2 + etas[1] ** 2)
    return np.exp(-36.0 * (mag / eta_max) ** 36)


def _advect_v(F, E, grid, tau, use_filter):
    d = grid.d
    Fe = sfft.rfftn(F, axes=_v_axes(d), workers=worker_count())
    etas = _v_frequencies(grid)
    if d == 1:
        phase = E[:, None] * etas[0][None, :]
    else:
        phase = (
            E[0][:, :, None, None] * etas[0][None, None, :, :]
            + E[1][:, :, None, None] * etas[1][None, None, :, :]
        )
    mult = np.exp(-1j * tau * phase) * _v_nyquist(grid)
    if use_filter:
        mult = mult * _filter(grid)
    Fe *= mult
    return sfft.irfftn(Fe, s=(grid.n_v,) * d, axes=_v_axes(d), workers=worker_count())


def _boundary_mass(F, grid):
    v = np.abs(grid.v)
    outer = v > BOUNDARY_FRACTION * grid.v_max
    if grid.d == 1:
        edge = np.abs(F[:, outer]).sum()
    else:
        inner = ~outer
        edge = np.abs(F).sum() - np.abs(F[:, :, inner][:, :, :, inner]).sum()
    total = np.abs(F).sum()
    return float(edge / total) if total > 0 else 0.0


def step(state: SimState, dt, W, grid: PhaseSpaceGrid, use_filter=False, n0=0.0,
         field_off=False, check_boundary=True):
    """One Strang step: half x-shift, field solve, full v-shift, half x-shift."""
    F = _advect_x(state.F, grid, 0.5 * dt)
    if field_off or W is None:
        E = np.zeros((grid.n_x,) * grid.d if grid.d == 1 else (2, grid.n_x, grid.n_x))
    else:
        E = field_solve(F, W, grid, n0)
        F = _advect_v(F, E, grid, dt, use_filter)
    F = _advect_x(F, grid, 0.5 * dt)
    n = state.steps + 1
    t = state.t + dt
    if not np.all(np.isfinite(F)):
        raise NumericalError(f"non-finite values at step {n} (t = {t:g})", step=n, time=t)
    if check_boundary:
        leak = _boundary_mass(F, grid)
        if leak > BOUNDARY_TOL:
            raise NumericalError(
                f"boundary mass {leak:.2e} exceeds {BOUNDARY_TOL:.0e} at step {n} (t = {t:g})",
                step=n, time=t,
            )
    return SimState(F, t, E, n)


def conserved_quantities(state: SimState, W, grid: PhaseSpaceGrid):
    """Mass, L1, L2, energy and entropy by rectangle-rule quadrature."""
    F = state.F
    cell = (grid.dx * grid.dv) ** grid.d
    v2 = sum(v * v for v in _velocities(grid))
    rho, phi = _potential(F, W, grid) if W is not None else (None, None)
    kinetic = 0.5 * cell * float(np.sum(F * v2))
    potential = 0.0 if W is None else 0.5 * grid.dx**grid.d * float(np.sum(rho * phi))
    Fc = np.maximum(F, 1e-300)
    return {
        "mass": cell * float(np.sum(F)),
        "L1": cell * float(np.sum(np.abs(F))),
        "L2": math.sqrt(cell * float(np.sum(F * F))),
        "energy": kinetic + potential,
        "entropy": cell * float(np.sum(Fc * np.log(Fc))),
    }


# --- initial data -----------------------------------------------------------


@dataclass(frozen=True)
class ModeSpec:
    """Perturbation a cos(k.x + phase) phi(v) cos(eta0.v)."""

    k: int | tuple = 1
    amplitude: float = 0.01
    eta0: float | tuple = 0.0
    phase: float = 0.0
    envelope: str = "equilibrium"
    T_env: float = 1.0

    def to_dict(self):
        return {
            "k": list(self.k) if isinstance(self.k, tuple) else self.k,
            "amplitude": self.amplitude,
            "eta0": list(self.eta0) if isinstance(self.eta0, tuple) else self.eta0,
            "phase": self.phase,
            "envelope": self.envelope,
            "T_env": self.T_env,
        }


@dataclass(frozen=True)
class InitialData:
    modes: tuple = ()
    checkpoint: str | None = None


def initial_state(spec, grid: PhaseSpaceGrid, init: InitialData):
    """Sample f0 plus the configured perturbation modes on the grid."""
    if init.checkpoint:
        F, t, meta = read_checkpoint(init.checkpoint)
        if (meta["d"], meta["n_x"], meta["n_v"]) != (grid.d, grid.n_x, grid.n_v) or not math.isclose(
            meta["v_max"], grid.v_max
        ):
            raise ValueError("checkpoint grid does not match the configured grid")
        return SimState(F, t)
    d = grid.d
    x, v = grid.x, grid.v
    if d == 1:
        V = v
        X = [x]
        f0 = spec(v)
        F = np.broadcast_to(f0, (grid.n_x, grid.n_v)).copy()
    else:
        V = np.stack(np.meshgrid(v, v, indexing="ij"), axis=-1)
        X = np.meshgrid(x, x, indexing="ij")
        f0 = spec(V)
        F = np.broadcast_to(f0, (grid.n_x,) * 2 + (grid.n_v,) * 2).copy()
    for m in init.modes:
        kv = np.atleast_1d(m.k).astype(float)
        ev = np.atleast_1d(np.broadcast_to(m.eta0, (d,))).astype(float)
        if kv.size != d:
            raise ValueError("mode wavevector dimension mismatch")
        if np.any(np.abs(kv) >= grid.n_x // 2):
            raise ValueError(f"mode {m.k} outside the x lattice")
        if np.any(np.abs(ev) >= math.pi / grid.dv):
            raise ValueError(f"eta0 {m.eta0} outside the eta lattice")
        if m.envelope == "equilibrium":
            env = f0
        elif m.envelope == "gaussian":
            env = Maxwellian(1.0, m.T_env, 0.0 if d == 1 else (0.0,) * d, d)(V)
        else:
            raise ValueError(f"unknown envelope {m.envelope!r}")
        arg_x = sum(kc * Xc for kc, Xc in zip(kv, X)) + m.phase
        if d == 1:
            arg_v = ev[0] * V
            F += m.amplitude * np.cos(arg_x)[:, None] * (env * np.cos(arg_v))[None, :]
        else:
            arg_v = V @ ev
            F += m.amplitude * np.cos(arg_x)[:, :, None, None] * (env * np.cos(arg_v))[None, None]
    return SimState(F, 0.0)


def spectral_initial_data(spec, grid: PhaseSpaceGrid, init: InitialData):
    """Coefficients g_hat(k, eta) of the perturbation that ``initial_state`` samples (d = 1).

    a cos(kx + phase) env(v) cos(eta0 v) has coefficient (a/2) e^(+-i phase) on +-k
    and v-transform (env_hat(eta - eta0) + env_hat(eta + eta0)) / 2.
    """
    if grid.d != 1:
        raise ValueError("spectral initial data is implemented for d = 1")
    if init.checkpoint:
        F, _, _ = read_checkpoint(init.checkpoint)
        return SpectralField.from_physical(F - spec(grid.v)[None, :], grid)
    kmax = max([abs(int(m.k)) for m in init.modes], default=1)
    ks = np.arange(-kmax, kmax + 1)
    vals = np.zeros((ks.size, grid.n_v), dtype=complex)
    eta = grid.eta
    for m in init.modes:
        kk = int(m.k)
        if kk == 0 or abs(kk) >= grid.n_x // 2:
            raise ValueError(f"mode {m.k} outside the x lattice")
        if m.envelope == "equilibrium":
            env = spec.fourier
        elif m.envelope == "gaussian":
            env = Maxwellian(1.0, m.T_env).fourier
        else:
            raise ValueError(f"unknown envelope {m.envelope!r}")
        e0 = float(m.eta0)
        prof = 0.5 * (env(eta - e0) + env(eta + e0))
        vals[ks == kk] += 0.5 * m.amplitude * np.exp(1j * m.phase) * prof
        vals[ks == -kk] += 0.5 * m.amplitude * np.exp(-1j * m.phase) * prof
    return SpectralField(ks, eta, vals)


# --- driver -----------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    grid: PhaseSpaceGrid
    spec: object
    W: object
    initial: InitialData = InitialData()
    use_filter: bool = False
    cadence: int = 1
    snapshot_every: int = 0
    field_off: bool = False


@dataclass
class Trajectory:
    """Recorded diagnostics; ``rho`` columns follow ``k`` (non-negative modes)."""

    t: np.ndarray
    k: np.ndarray
    rho: np.ndarray
    E_norm: np.ndarray
    conserved: dict
    snapshots: list = field(default_factory=list)
    final: SimState | None = None
    grid: PhaseSpaceGrid | None = None

    def mode(self, k):
        return self.rho[:, int(np.nonzero(self.k == k)[0][0])]

    def drift(self, name):
        """max |q(t) - q(0)| / |q(0)| over the record."""
        q = np.asarray(self.conserved[name])
        return float(np.max(np.abs(q - q[0])) / abs(q[0]))


def _density_modes(F, grid):
    """Fourier coefficients rho_k for k = 0..n_x/2-1 (first axis only if d = 2)."""
    rho = _density(F, grid)
    if grid.d == 1:
        return sfft.rfft(rho)[: grid.n_x // 2] / grid.n_x
    return sfft.rfft(rho.mean(axis=1))[: grid.n_x // 2] / grid.n_x


def _field_norm(E, grid):
    return math.sqrt(grid.dx**grid.d * float(np.sum(E * E)))


def simulate(cfg: SimConfig, on_record=None):
    """Run the step loop recording density modes, field norm and invariants."""
    grid = cfg.grid
    n0 = cfg.spec.n0
    state = initial_state(cfg.spec, grid, cfg.initial)
    if not cfg.field_off:
        state.E = field_solve(state.F, cfg.W, grid, n0)
    else:
        state.E = np.zeros(1)
    times, rhos, enorms = [], [], []
    cons = {k: [] for k in ("mass", "L1", "L2", "energy", "entropy")}
    snaps = []

    def record(s):
        times.append(s.t)
        rhos.append(_density_modes(s.F, grid))
        enorms.append(_field_norm(s.E, grid))
        for name, val in conserved_quantities(s, None if cfg.field_off else cfg.W, grid).items():
            cons[name].append(val)
        if cfg.snapshot_every and (len(times) - 1) % cfg.snapshot_every == 0:
            snaps.append((s.t, s.F.copy()))
        if on_record is not None:
            on_record(s)

    record(state)
    n_steps = grid.n_t
    t0 = state.t
    for i in range(n_steps):
        state = step(state, grid.dt, cfg.W, grid, cfg.use_filter, n0, cfg.field_off)
        state.t = t0 + (i + 1) * grid.dt
        if cfg.field_off:
            state.E = np.zeros(1)
        if (i + 1) % cfg.cadence == 0 or i + 1 == n_steps:
            if not cfg.field_off:
                # field at the recorded time (the step's E is the midpoint field)
                state.E = field_solve(state.F, cfg.W, grid, n0)
            record(state)
    return Trajectory(
        np.array(times), np.arange(grid.n_x // 2), np.array(rhos), np.array(enorms),
        {k: np.array(v) for k, v in cons.items()}, snaps, state, grid,
    )


def reverse_velocity(F, grid):
    """F(x, -v) on the periodic v grid (index j -> n_v - j)."""
    axes = _v_axes(grid.d)
    return np.roll(np.flip(F, axis=axes), 1, axis=axes)


# --- checkpoints --------------------------------------------------------------------


def write_checkpoint(path, F, grid: PhaseSpaceGrid, t):
    F = np.ascontiguousarray(F, dtype="<f8")
    header = _HEADER.pack(_MAGIC, _VERSION, grid.d, grid.n_x, grid.n_v, float(grid.v_max), float(t))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(F.tobytes(order="C"))


def read_checkpoint(path):
    """Return (F, t, header dict); validates magic, version and size."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("checkpoint too short")
    magic, version, d, n_x, n_v, v_max, t = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    if version != _VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    shape = (n_x,) * d + (n_v,) * d
    count = int(np.prod(shape))
    body = raw[_HEADER.size:]
    if len(body) != 8 * count:
        raise ValueError("checkpoint size does not match its header")
    F = np.frombuffer(body, dtype="<f8").reshape(shape).astype(float)
    return F, t, {"d": d, "n_x": n_x, "n_v": n_v, "v_max": v_max, "version": version}


# --- plasma echo ----------------------------------------------------------------------


@dataclass
class EchoReport:
    k_seed: int
    k_drv: int
    eta0: float
    bursts: dict
    predicted: dict
    amplification: dict
    floor: dict
    trajectory: Trajectory | None = None

    def primary_burst(self, k):
        """Largest detected burst (time, amplitude) on mode k, or None."""
        b = self.bursts.get(k, [])
        return max(b, key=lambda x: x[1]) if b else None


def detect_bursts(t, amp, k, factor=10.0, window=None):
    """Local maxima of ``amp`` exceeding ``factor`` x trailing median over 5/k.

    Returns (list of (time, amplitude), noise floor estimate).
    """
    t = np.asarray(t, dtype=float)
    a = np.asarray(amp, dtype=float)
    if window is None:
        window = 5.0 / abs(k)
    dt = t[1] - t[0]
    w = max(3, int(round(window / dt)))
    found = []
    for i in range(max(w, 1), a.size - 1):
        if a[i] > a[i - 1] and a[i] >= a[i + 1]:
            med = float(np.median(a[i - w:i]))
            if a[i] > factor * med:
                found.append((float(t[i]), float(a[i])))
    floor = float(np.median(a[a.size // 2:])) if a.size else 0.0
    return found, floor


def echo_experiment(spec, W, grid: PhaseSpaceGrid, eps_drv=1e-3, eps_seed=1e-3, k_seed=1,
                    k_drv=None, eta0=200.0, use_filter=True, T_env=1.0, keep_trajectory=False):
    """Seed cos(k_seed x) f0 plus a tilted driver on k_drv; detect echo bursts."""
    if k_drv is None:
        k_drv = k_seed + 1
    if eta0 / k_seed >= grid.t_final:
        raise ValueError("echo time eta0/k_seed beyond the simulated horizon")
    modes = [ModeSpec(k_seed, eps_seed, 0.0)]
    if eps_drv:
        modes.append(ModeSpec(k_drv, eps_drv, eta0, envelope="gaussian", T_env=T_env))
    cfg = SimConfig(grid, spec, W, InitialData(tuple(modes)), use_filter=use_filter)
    traj = simulate(cfg)
    bursts, floors, amps = {}, {}, {}
    for k in sorted({k_seed, k_drv}):
        found, floor = detect_bursts(traj.t, np.abs(traj.mode(k)), k)
        bursts[k] = found
        floors[k] = floor
        best = max(found, key=lambda x: x[1]) if found else None
        amps[k] = best[1] / (eps_seed * eps_drv) if (best and eps_drv and eps_seed) else math.nan
    predicted = {k: eta0 / k for k in sorted({k_seed, k_drv})}
    return EchoReport(k_seed, k_drv, eta0, bursts, predicted, amps, floors,
                      traj if keep_trajectory else None)


def echo_chain_prediction(eps, eta, C=1.0):
    """Toy echo-chain amplification.

    N = floor((eps eta)^(1/3)); amplification = prod_{l=1}^{N} C eps eta / l^3.
    The Stirling form (2 pi)^(-3/2) <x>^(-1/2) exp(3 x^(1/3)), x = C eps eta,
    is returned alongside for comparison.  Logs are always reported; the
    plain values become inf (with ``overflow`` set) past float range.
    """
    if not (eps > 0 and eta > 0 and C > 0):
        raise ValueError("eps, eta and C must be positive")
    x = eps * eta
    N = int(math.floor(x ** (1.0 / 3.0) + 1e-12))
    y = C * x
    log_amp = sum(math.log(y) - 3.0 * math.log(l) for l in range(1, N + 1))
    bracket = math.sqrt(1.0 + y * y)
    log_stirling = -1.5 * math.log(2 * math.pi) - 0.5 * math.log(bracket) + 3.0 * y ** (1.0 / 3.0)
    overflow = log_amp > 709.0 or log_stirling > 709.0
    return {
        "N": N,
        "total_amplification": math.inf if log_amp > 709.0 else math.exp(log_amp),
        "log_amplification": log_amp,
        "stirling": math.inf if log_stirling > 709.0 else math.exp(log_stirling),
        "log_stirling": log_stirling,
        "overflow": overflow,
    }
