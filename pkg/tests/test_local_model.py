import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from focusfocus.errors import DegenerateLatticeError, DomainError
from focusfocus.local_model import (
    ScalarField,
    action_angle,
    fiber_times,
    fibration,
    flow,
    glue_map,
    gluing_cauchy_riemann_residual,
    parametrize,
    parametrize_differentials,
    period_lattice,
    pulled_back_canonical_form,
    verify_symplectic_identity,
)
from focusfocus.scalar_kernels import HarmonicInvariant, ModelParams

S0 = HarmonicInvariant.zero()
S1 = HarmonicInvariant((0.1, 0.0, 0.05))
S2 = HarmonicInvariant((0.2 - 0.1j, 0.3j))

moduli = st.floats(0.02, 0.45)
angles = st.floats(-3.1, 3.1)
times = st.floats(-1.5, 1.5)


@given(moduli, angles, times, times)
@settings(max_examples=50, deadline=None)
def test_flow_preserves_fibers_and_parametrization_covers_them(r, a, t1, t2):
    c = r * np.exp(1j * a)
    z1, z2 = parametrize(c, (t1, t2))
    assert fibration(z1, z2) == pytest.approx(c, abs=1e-14)
    w1, w2 = flow(z1, z2, 0.3, -0.7)
    assert fibration(w1, w2) == pytest.approx(c, abs=1e-14)


@given(moduli, angles, times)
@settings(max_examples=50, deadline=None)
def test_gluing_closes_the_first_period(r, a, t2):
    # flowing the section by the first generator and gluing returns (c, 1)
    c = r * np.exp(1j * a)
    for S in (S0, S2):
        lam, mu = period_lattice(c, S).gen1
        z1, z2 = parametrize(c, (lam, mu))
        g1, g2 = glue_map(z1, z2, S)
        assert g1 == pytest.approx(c, rel=1e-12)
        assert g2 == pytest.approx(1.0, rel=1e-12)


def test_second_period_is_2pi():
    c = 0.2 + 0.1j
    z = parametrize(c, (0.3, 0.4))
    w = parametrize(c, (0.3, 0.4 + 2 * np.pi))
    assert np.allclose(z, w)


def test_parametrize_differentials_against_finite_differences():
    c, t = 0.15 - 0.2j, (0.3, 1.1)
    dz1, dz2 = parametrize_differentials(c, t)
    h = 1e-6
    base = np.array([c.real, c.imag, *t])

    def z(p):
        return np.array(parametrize(p[0] + 1j * p[1], (p[2], p[3])))

    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        d = (z(base + e) - z(base - e)) / (2 * h)
        assert d[0] == pytest.approx(dz1.coeffs[i], abs=1e-8)
        assert d[1] == pytest.approx(dz2.coeffs[i], abs=1e-8)


def test_canonical_form_pulls_back_to_dc_dt():
    w = pulled_back_canonical_form(0.2 + 0.1j, (0.4, -0.3))
    # Re(dc ^ (dt1 - i dt2)) = dc1 ^ dt1 + dc2 ^ dt2
    assert np.allclose(w.coeffs, [0, 1, 0, 0, 1, 0])


def test_action_angle_monodromy():
    c = 0.2 * np.exp(0.7j)
    t = (0.3, 0.8)
    a0 = action_angle(c, t, S2)
    a1 = action_angle(c, t, S2, winding=1)
    assert a1.z_m == pytest.approx(a0.z_m + a0.z_e)
    # theta_m picks up -theta_e at the same flow times
    assert a1.theta_m == pytest.approx(a0.theta_m - a0.theta_e)
    assert a1.theta_e == pytest.approx(a0.theta_e)


def test_action_angle_inverse():
    c = 0.2 * np.exp(-2.0j)
    t1, t2 = fiber_times(c, 0.9, 2.5, S1)
    aa = action_angle(c, (t1, t2), S1)
    assert aa.theta_m == pytest.approx(0.9) and aa.theta_e == pytest.approx(2.5)


def test_action_angle_errors():
    with pytest.raises(DegenerateLatticeError):
        action_angle(0.4, (0.1, 0.1), HarmonicInvariant((-3.0,)))
    with pytest.raises(DomainError):
        action_angle(0.0, (0.1, 0.1), S0)
    with pytest.raises(DomainError):
        action_angle(0.6, (0.1, 0.1), S0, ModelParams(1.0, 0.5))


@pytest.mark.parametrize("S", [S0, S1, S2])
def test_symplectic_identity_random_points(S):
    rng = np.random.default_rng(5)
    c = rng.uniform(0.02, 0.45, 30) * np.exp(1j * rng.uniform(-3, 3, 30))
    t = (rng.uniform(-1, 1, 30), rng.uniform(0, 6, 30))
    assert verify_symplectic_identity(c, t, S) < 1e-8


def test_cauchy_riemann_gate():
    z1 = np.array([0.2 + 0.1j, -0.3j, 0.1])
    z2 = np.array([0.9, 1.1 - 0.2j, 0.5j])
    assert gluing_cauchy_riemann_residual(S2, z1, z2) < 1e-8
    bad = ScalarField(lambda c1, c2: c1**2)
    assert gluing_cauchy_riemann_residual(bad, z1, z2) > 1e-2
    # the black-box route agrees with the polynomial one for harmonic input
    assert gluing_cauchy_riemann_residual(ScalarField.from_invariant(S2), z1, z2) < 1e-8
