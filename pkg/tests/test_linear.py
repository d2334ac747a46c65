import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from landau_kit.dispersion import InteractionKernel, dispersion_root
from landau_kit.equilibria import DoubleMaxwellian, Maxwellian
from landau_kit.linear import (
    PhaseSpaceGrid,
    SpectralField,
    fit_exponential_rate,
    fktld_check,
    free_transport_density,
    free_transport_evolve,
    interpolate_eta,
    l2_norm,
    linear_vp_density,
    scattering_profile,
)

M = Maxwellian()
C = InteractionKernel.coulomb()


def _packet(grid, amp=1e-3, spec=M, ks=(-1, 0, 1)):
    return SpectralField.from_function(
        lambda k, e: (amp / 2) * spec.fourier(e) if abs(k) == 1 else 0 * e, list(ks), grid.eta)


def test_grid_validation():
    with pytest.raises(ValueError):
        PhaseSpaceGrid(1, 12, 64, 8.0, 0.1, 1.0)
    g = PhaseSpaceGrid(1, 8, 64, 8.0, 0.1, 1.0)
    assert g.dx == pytest.approx(2 * math.pi / 8)
    assert g.d_eta == pytest.approx(math.pi / 8.0)
    assert g.n_t == 10


def test_orr_peak_example():
    grid = PhaseSpaceGrid(1, 4, 2048, 10 * math.pi, 0.1, 100.0)
    g = SpectralField.from_function(lambda k, e: np.exp(-np.abs(e - 50.0)), [1], grid.eta)
    r = free_transport_density(g, 1, grid.t)
    assert grid.t[np.argmax(np.abs(r))] == pytest.approx(50.0, abs=grid.dt)
    assert np.max(np.abs(r - np.exp(-np.abs(grid.t - 50.0)))) < 1e-8


def test_missing_mode_and_truncation_flag():
    grid = PhaseSpaceGrid(1, 4, 256, 8.0, 0.1, 1.0)
    g = SpectralField.from_function(lambda k, e: np.exp(-e * e), [1], grid.eta)
    assert free_transport_density(g, 2, 0.0) == 0
    val, truncated = free_transport_density(g, 1, np.array([0.0, 1e3]), full_output=True)
    assert val[1] == 0 and val[0] == 1 and truncated
    assert not free_transport_density(g, 1, np.array([0.0, 1.0]), full_output=True)[1]


def test_gaussian_interpolation_accuracy():
    grid = PhaseSpaceGrid(1, 4, 1024, 8 * math.pi, 0.1, 1.0)
    g = SpectralField.from_function(lambda k, e: np.exp(-((e - 3.0) ** 2) / 8), [1], grid.eta)
    t = np.linspace(-20, 20, 997)
    assert np.max(np.abs(free_transport_density(g, 1, t) - np.exp(-((t - 3.0) ** 2) / 8))) < 1e-9


def test_evolve_identity_and_homogeneous():
    grid = PhaseSpaceGrid(1, 4, 256, 8.0, 0.1, 1.0)
    g = _packet(grid, 1.0)
    assert np.array_equal(free_transport_evolve(g, 0.0).values, g.values)
    h = SpectralField.from_function(lambda k, e: np.exp(-e * e), [0], grid.eta)
    assert np.array_equal(free_transport_evolve(h, 3.7).values, h.values)


def test_evolve_reversibility_and_norm():
    grid = PhaseSpaceGrid(1, 4, 1024, 8 * math.pi, 0.1, 1.0)
    g = SpectralField.from_function(lambda k, e: np.exp(-(e - k) ** 2 / 4), [-2, -1, 0, 1, 2], grid.eta)
    fwd = free_transport_evolve(g, 2.3)
    back = free_transport_evolve(fwd, -2.3)
    assert np.max(np.abs(back.values - g.values)) < 1e-8
    assert abs(l2_norm(fwd) - l2_norm(g)) < 1e-9


@given(x=st.integers(0, 255))
def test_interpolation_exact_at_nodes(x):
    eta = np.linspace(-10, 10, 256, endpoint=False)
    vals = np.sin(eta) + 1j * eta
    assert interpolate_eta(vals, eta, np.array([eta[x]]))[0] == vals[x]


@given(t=st.floats(0.0, 5.0), shift=st.floats(-3, 3))
def test_reversibility_property(t, shift):
    grid = PhaseSpaceGrid(1, 4, 1024, 8 * math.pi, 0.1, 1.0)
    g = SpectralField.from_function(lambda k, e: np.exp(-(e - shift) ** 2 / 3), [-1, 0, 1], grid.eta)
    back = free_transport_evolve(free_transport_evolve(g, t), -t)
    assert np.max(np.abs(back.values - g.values)) < 1e-8


def test_fktld_examples():
    grid = PhaseSpaceGrid(1, 8, 1024, 8.0, 0.1, 1.0)
    g = SpectralField.from_function(lambda k, e: np.exp(-e * e / 2) if k else 0 * e, [-2, -1, 0, 1, 2], grid.eta)
    a = fktld_check(g, 1, T=20.0)
    b = fktld_check(g, 1, T=40.0, n_t=8001)
    assert 0 < a.ratio < np.inf and not a.inconclusive
    assert b.ratio == pytest.approx(a.ratio, rel=1e-6)
    zero = g.replace(np.zeros_like(g.values), 0.0)
    z = fktld_check(zero, 1)
    assert z.lhs == z.rhs == z.ratio == 0
    scaled = g.replace(3.5 * g.values, 0.0)
    assert fktld_check(scaled, 1).ratio == pytest.approx(a.ratio, rel=1e-12)


def test_zero_density_is_free_transport_bitwise():
    grid = PhaseSpaceGrid(1, 4, 1024, 8 * math.pi, 0.05, 20.0)
    g = _packet(grid)
    h = linear_vp_density(g, Maxwellian(0.0, 1.0), C, grid)
    assert np.array_equal(h.mode(1), free_transport_density(g, 1, grid.t))


def test_density_symmetry_and_mean_mode():
    grid = PhaseSpaceGrid(1, 4, 512, 8.0, 0.05, 10.0)
    g = _packet(grid)
    h = linear_vp_density(g, M, C, grid)
    assert np.max(np.abs(h.mode(-1) - np.conj(h.mode(1)))) < 1e-15
    assert np.all(h.mode(0) == 0)
    rec = next(iter(h.records()))
    assert set(rec) == {"t", "k", "re_rho", "im_rho", "E_norm"}


def test_damping_rate_matches_root():
    grid = PhaseSpaceGrid(1, 4, 1024, 8 * math.pi, 0.05, 40.0)
    h = linear_vp_density(_packet(grid), M, C, grid)
    fit = fit_exponential_rate(h.t, h.E_norm)
    z = dispersion_root(M, C, 1, -0.8 + 2j)
    assert abs(-fit.rate - (-z.real)) / abs(z.real) < 1e-2


def test_two_stream_growth_matches_root():
    d = DoubleMaxwellian.two_stream(1.0, 0.1, 1.0)
    grid = PhaseSpaceGrid(1, 4, 1024, 8 * math.pi, 0.05, 100.0)
    h = linear_vp_density(_packet(grid, spec=d), d, C, grid)
    z = dispersion_root(d, C, 1, 0.3, re_min=0.0)
    assert abs(fit_exponential_rate(h.t, h.E_norm).rate - z.real) / z.real < 1e-2
    # deeper into the growth phase the subdominant roots have died out
    assert abs(fit_exponential_rate(h.t, h.E_norm, upper=1e-4).rate - z.real) / z.real < 1e-3


def test_fit_synthetic_signal():
    t = np.linspace(0, 30, 3001)
    y = np.exp(-0.5 * t) * np.abs(np.cos(2 * t)) + 1e-300
    assert fit_exponential_rate(t, y).rate == pytest.approx(-0.5, rel=1e-3)
    with pytest.raises(ValueError):
        fit_exponential_rate(t[:3], y[:3])


def test_scattering_trivial_cases():
    grid = PhaseSpaceGrid(1, 4, 512, 8.0, 0.05, 10.0)
    zero = _packet(grid, 0.0)
    res = scattering_profile(linear_vp_density(zero, M, C, grid), zero, M, grid)
    assert np.all(res.f_inf.values == 0)
    g = _packet(grid)
    res = scattering_profile(linear_vp_density(g, Maxwellian(0.0, 1.0), C, grid), g, Maxwellian(0.0, 1.0), grid)
    assert np.array_equal(res.f_inf.values, g.values)


def test_scattering_self_convergence():
    out = []
    for T in (50.0, 100.0):
        grid = PhaseSpaceGrid(1, 4, 1024, 8 * math.pi, 0.05, T)
        g = _packet(grid)
        out.append(scattering_profile(linear_vp_density(g, M, C, grid), g, M, grid))
    diff = out[0].f_inf.replace(out[0].f_inf.values - out[1].f_inf.values, 0.0)
    assert l2_norm(diff) < 1e-6
    d = out[1].distance
    late = d[out[1].t > 60]
    assert np.all(np.diff(late) <= 1e-18)
