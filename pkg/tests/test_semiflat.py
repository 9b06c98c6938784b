import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from focusfocus.errors import DegenerateLatticeError
from focusfocus.geometry import FRAME_CT, exterior_derivative_fd
from focusfocus.scalar_kernels import HarmonicInvariant, ModelParams
from focusfocus.semiflat import (
    J_AU,
    decomposition_potential,
    semiflat_form,
    semiflat_form_from_definition,
    semiflat_metric_matrix,
    semiflat_positive,
    verify_decomposition,
    verify_wedge_identities,
)

S0 = HarmonicInvariant.zero()
S1 = HarmonicInvariant((0.1, 0.0, 0.05))
P = ModelParams(R=1.3)


def _points(n, seed, rmax=0.45):
    rng = np.random.default_rng(seed)
    c = rng.uniform(0.02, rmax, n) * np.exp(1j * rng.uniform(-3.1, 3.1, n))
    return c, (rng.uniform(-1, 1, n), rng.uniform(0, 2 * np.pi, n))


@pytest.mark.parametrize("S", [S0, S1])
def test_closed_form_matches_definition(S):
    c, t = _points(40, 1)
    a = semiflat_form(c, t, S, P)
    b = semiflat_form_from_definition(c, t, S, P)
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-9


@pytest.mark.parametrize("S", [S0, S1])
def test_form_is_closed(S):
    c, t = _points(10, 2)
    x = np.stack([c.real, c.imag, *t], -1)

    def field(p):
        return semiflat_form(p[..., 0] + 1j * p[..., 1], (p[..., 2], p[..., 3]), S, P)

    r = np.abs(c)[:, None]
    h = np.concatenate([0.005 * r, 0.005 * r, np.full_like(r, 0.005), np.full_like(r, 0.005)], -1)
    assert exterior_derivative_fd(field, x, h, 6).max_abs() < 1e-8


def test_varying_R_breaks_closedness():
    c, t = _points(5, 3)
    x = np.stack([c.real, c.imag, *t], -1)

    def field(p):
        cc = p[..., 0] + 1j * p[..., 1]
        return semiflat_form(cc, (p[..., 2], p[..., 3]), S0, P, R_field=lambda z: 1 + np.abs(z) ** 2)

    assert exterior_derivative_fd(field, x, 1e-3, 6).max_abs() > 1e-3


def test_identities_hold():
    c, t = _points(100, 4)
    for S in (S0, S1):
        assert verify_wedge_identities(c, t, S, P).max() < 1e-10


@given(st.floats(0.02, 0.45), st.floats(-3, 3), st.floats(-1, 1), st.floats(0, 6), st.floats(0.2, 5))
@settings(max_examples=60, deadline=None)
def test_metric_is_symmetric_with_unit_determinant(r, a, t1, t2, R):
    c = r * np.exp(1j * a)
    g = semiflat_metric_matrix(c, (t1, t2), S1, ModelParams(R=R)).g
    assert np.allclose(g, g.T)
    assert np.linalg.det(g) == pytest.approx(1.0, rel=1e-9)
    assert np.allclose(J_AU @ J_AU, -np.eye(4))


@pytest.mark.parametrize("a", [-1.0, -2.0])
def test_positivity_boundary_is_the_circle(a):
    S = HarmonicInvariant((a,), radius=2.0)
    r = np.linspace(0.01, 0.49, 200)
    c = r * np.exp(0.3j)
    ok, _ = semiflat_positive(c, (0.2 + 0 * r, 0.5 + 0 * r), S, P)
    inside = r < np.exp(a)
    cell = r[1] - r[0]
    far = np.abs(r - np.exp(a)) > cell
    assert np.all(ok[far] == inside[far])


def test_decomposition_potential():
    c, t = _points(10, 5)
    for S in (S0, S1):
        assert verify_decomposition(c, t, S, P) < 1e-8
    assert decomposition_potential(0.1, (2.0, 0.0), S0, P) == pytest.approx(4 / (1.3 * -np.log(0.1)))


def test_degenerate_lattice_rejected():
    with pytest.raises(DegenerateLatticeError):
        semiflat_form(np.exp(-1.0), (0.1, 0.1), HarmonicInvariant((-1.0,)), P)


def test_frame():
    assert semiflat_form(0.1j, (0.0, 0.0), S0, P).frame == FRAME_CT
