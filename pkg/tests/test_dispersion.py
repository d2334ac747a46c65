import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from landau_kit.dispersion import (
    InteractionKernel,
    dispersion_root,
    kernel_laplace,
    kernel_time,
    penrose_margin,
)
from landau_kit.equilibria import DoubleMaxwellian, Maxwellian, PoissonEquilibrium
from landau_kit.errors import DomainError

M = Maxwellian()
C = InteractionKernel.coulomb()


def _kernel_oracle(spec, k, t):
    """(i k / |k|^2) int e^{-ikvt} d_v f0 dv with d_v f0 = -(v/T) f0."""
    eta = k * t
    re = quad(lambda v: math.cos(eta * v) * (-v / spec.T) * float(spec(v)), -30, 30, limit=200)[0]
    im = quad(lambda v: -math.sin(eta * v) * (-v / spec.T) * float(spec(v)), -30, 30, limit=200)[0]
    return (1j * k / k**2) * complex(re, im)


def test_kernel_time_examples():
    assert kernel_time(M, C, 1, 0.0) == 0
    assert complex(kernel_time(M, C, 1, 1.0)) == pytest.approx(-math.exp(-0.5), abs=1e-15)
    assert complex(kernel_time(M, C, 1, 1.0)) == pytest.approx(_kernel_oracle(M, 1, 1.0), abs=1e-12)
    screened = InteractionKernel.screened()
    assert complex(kernel_time(M, screened, 1, 1.0)) == pytest.approx(-math.exp(-0.5) / 2, abs=1e-15)


def test_kernel_time_rejects_zero_mode():
    with pytest.raises(ValueError):
        kernel_time(M, C, 0, 1.0)


def test_symbols():
    assert C.symbol(2) == pytest.approx(0.25)
    assert InteractionKernel.coulomb(-1).symbol(2) == pytest.approx(-0.25)
    assert InteractionKernel.screened().symbol(2) == pytest.approx(0.2)
    assert InteractionKernel.power_law(3.0).symbol(2) == pytest.approx(1 / 8)
    assert InteractionKernel.custom({1: 0.5, 4: 0.1}).symbol(2) == pytest.approx(0.1)
    assert C.symbol((1, 1)) == pytest.approx(0.5)


def test_laplace_at_zero_matches_direct_integral():
    # int_0^inf -t e^{-t^2/2} dt = -1
    assert complex(kernel_laplace(M, C, 1, 0.0)) == pytest.approx(-1.0, abs=1e-12)
    q = complex(kernel_laplace(M, C, 1, 0.0, method="quadrature"))
    assert q == pytest.approx(-1.0, abs=1e-10)


def test_laplace_closed_form_agrees_with_quadrature():
    z = np.array([0.3 + 1j, -0.2 + 2.5j, 1.0 - 0.5j, 2.0])
    for spec in (M, Maxwellian(0.7, 2.0), PoissonEquilibrium(1.0, 1), PoissonEquilibrium(1.0, 2)):
        a = kernel_laplace(spec, C, 2, z, method="closed")
        b = kernel_laplace(spec, C, 2, z, method="quadrature")
        assert np.max(np.abs(a - b)) < 1e-9


def test_laplace_real_axis_decay():
    vals = [abs(complex(kernel_laplace(M, C, 1, z))) * z * z for z in (10.0, 100.0, 1000.0)]
    assert max(vals) < 1.01
    assert vals[-1] == pytest.approx(1.0, rel=1e-4)


def test_laplace_zero_density_and_domain():
    z = np.array([0.1 + 1j, 2.0])
    assert np.all(kernel_laplace(Maxwellian(0.0, 1.0), C, 1, z) == 0)
    with pytest.raises(DomainError):
        kernel_laplace(PoissonEquilibrium(1.0, 1), C, 1, -1.5)


@given(re=st.floats(-0.5, 3.0), im=st.floats(-20, 20), k=st.integers(1, 4))
def test_conjugate_symmetry_property(re, im, k):
    z = complex(re, im)
    a = complex(kernel_laplace(M, C, k, z.conjugate()))
    b = complex(kernel_laplace(M, C, k, z)).conjugate()
    assert abs(a - b) < 1e-12


def test_tail_bound_bounded_under_refinement():
    sups = []
    for w_max in (50.0, 200.0, 800.0):
        w = np.linspace(-w_max, w_max, 4001)
        K = kernel_laplace(M, C, 1, -0.3 + 1j * w)
        sups.append(float(np.max((2 + w * w) * np.abs(K))))
    assert sups[-1] < 1.05 * sups[0] + 1e-12


def test_penrose_maxwellian_stable():
    rep = penrose_margin(M, C, range(1, 9))
    assert rep.stable and rep.kappa > 0 and rep.converged
    assert rep.kappa == pytest.approx(0.7509, abs=1e-3)


def test_penrose_refinement_changes_margin_little():
    a = penrose_margin(M, C, [1, 2, 3], delta=0.2)
    b = penrose_margin(M, C, [1, 2, 3], delta=0.2, omega_max=128.0, n_omega=8192)
    assert abs(a.kappa - b.kappa) < 1e-6


def test_penrose_two_stream_unstable_and_threshold():
    assert not penrose_margin(DoubleMaxwellian.two_stream(1.0, 0.1, 1.0), C, [1]).stable
    assert penrose_margin(DoubleMaxwellian.two_stream(1.0, 0.1, 0.3), C, [1]).stable
    lo, hi = 0.3, 1.0
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        if penrose_margin(DoubleMaxwellian.two_stream(1.0, 0.1, mid), C, [1]).stable:
            lo = mid
        else:
            hi = mid
    assert 0.3 < lo < hi < 1.0 and hi - lo < 1e-3


def test_jeans_threshold():
    grav = InteractionKernel.coulomb(-1)
    assert not penrose_margin(Maxwellian(4.0, 1.0), grav, [1]).stable
    lo, hi = 0.5, 4.0
    for _ in range(14):
        mid = 0.5 * (lo + hi)
        if penrose_margin(Maxwellian(mid, 1.0), grav, [1]).stable:
            lo = mid
        else:
            hi = mid
    # static threshold n0 = T k^2
    assert hi == pytest.approx(1.0, abs=2e-3)


def test_root_maxwellian_landau():
    z = dispersion_root(M, C, 1, -0.8 + 2j)
    assert z is not None
    assert abs(1 - complex(kernel_laplace(M, C, 1, z))) < 1e-10
    assert z.real == pytest.approx(-0.85133, abs=1e-5)
    assert z.imag == pytest.approx(2.04590, abs=1e-5)


def test_no_unstable_roots_for_stable_maxwellian():
    for re in (0.05, 0.5, 1.0):
        for im in (0.0, 1.0, 2.0, 4.0):
            assert dispersion_root(M, C, 1, complex(re, im), re_min=0.0) is None


def test_two_stream_root_and_zero_density():
    d = DoubleMaxwellian.two_stream(1.0, 0.1, 1.0)
    z = dispersion_root(d, C, 1, 0.3, re_min=0.0)
    assert z is not None and z.real > 0
    assert z.real == pytest.approx(0.2023168318, abs=1e-8)
    assert dispersion_root(Maxwellian(0.0, 1.0), C, 1, 0.5 + 1j) is None


def test_root_guess_outside_region():
    with pytest.raises(DomainError):
        dispersion_root(PoissonEquilibrium(1.0, 1), C, 1, -2.0 + 0j)
