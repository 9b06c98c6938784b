import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from focusfocus.errors import (
    DomainError,
    NumericalFailure,
    PositivityError,
    SingularityError,
)
from focusfocus.holomorphic import canonical_form
from focusfocus.local_model import angle_frame_jacobian
from focusfocus.ooguri_vafa import (
    axis_minimum,
    bessel_series,
    embedding_pullback,
    gibbons_hawking_metric,
    kappa0,
    monopole_residual,
    omega0_residual,
    ov_potential,
    poisson_residual,
    positivity_margin,
    potential_axis_margin,
    potential_instanton,
    potential_lattice,
    sigma_correction,
)
from focusfocus.scalar_kernels import (
    EULER_GAMMA,
    HarmonicInvariant,
    ModelParams,
    invariant_eval,
)
from focusfocus.semiflat import semiflat_metric_matrix
from focusfocus.twistor import flip_theta_m

S0 = HarmonicInvariant.zero()
S1 = HarmonicInvariant((0.1, 0.05j))


def _mp_lattice(c, theta, R, S1_value):
    rho = R * abs(c)
    tau = mp.mpf(theta) / (2 * mp.pi)
    f = lambda n: 1 / mp.sqrt(rho**2 + (tau + n) ** 2) - (0 if n == 0 else 1 / abs(n))
    total = mp.nsum(f, [-mp.inf, mp.inf])
    k0 = mp.log(mp.mpf(R) / 2) + mp.euler
    return float(R / (4 * mp.pi) * (total + 2 * S1_value + 2 * k0))


@pytest.mark.parametrize("c,theta,R", [(0.1 + 0.05j, 1.0, 1.0), (0.3j, 4.0, 0.5), (-0.2, 0.2, 2.0)])
def test_lattice_potential_against_mpmath(c, theta, R):
    P = ModelParams(R)
    s1 = 0.1 - 0.1 * complex(c).imag  # Re f'(c) for f = 0.1 c + 0.05i c^2
    assert potential_lattice(c, theta, S1, P) == pytest.approx(_mp_lattice(c, theta, R, s1), abs=1e-12)


@pytest.mark.parametrize("c,theta,R", [(0.1 + 0.05j, 1.0, 1.0), (0.02j, 4.0, 0.5)])
def test_instanton_series_against_mpmath(c, theta, R):
    ref = R / mp.pi * mp.nsum(lambda n: mp.cos(n * theta) * mp.besselk(0, 2 * mp.pi * R * n * abs(c)), [1, mp.inf])
    assert potential_instanton(c, theta, ModelParams(R)) == pytest.approx(float(ref), rel=1e-12)


def test_axis_value_at_theta_pi():
    for R in (0.5, 1.0, 3.0):
        P = ModelParams(R)
        expected = R / np.pi * np.log(2) + R / (2 * np.pi) * (np.log(R / 2) + EULER_GAMMA)
        assert potential_lattice(0j, np.pi, S0, P) == pytest.approx(expected, abs=1e-13)
        assert kappa0(R) == pytest.approx(np.log(R / 2) + EULER_GAMMA)


def test_poisson_resummation_grid():
    for R in np.linspace(0.5, 2.0, 5):
        P = ModelParams(R, 10.0)
        rc = np.linspace(0.05, 3.0, 10) / R
        th = np.linspace(0.1, 2 * np.pi - 0.1, 10)
        RC, TH = np.meshgrid(rc, th, indexing="ij")
        assert poisson_residual(RC * np.exp(0.3j), TH, HarmonicInvariant(radius=100.0), P) < 1e-10


@given(st.floats(0.03, 0.4), st.floats(-3, 3), st.floats(0.1, 6.1))
@settings(max_examples=40, deadline=None)
def test_sigma_derivative_is_scaled_instanton_potential(r, a, th):
    P = ModelParams(1.7)
    c = r * np.exp(1j * a)
    h = 1e-5
    d = (sigma_correction(c, P, th + h) - sigma_correction(c, P, th - h)) / (2 * h)
    assert d == pytest.approx(potential_instanton(c, th, P) / P.R**2, abs=1e-8)


def test_monopole_and_omega0_at_random_points():
    rng = np.random.default_rng(7)
    P = ModelParams(1.3)
    c = rng.uniform(0.05, 0.4, 30) * np.exp(1j * rng.uniform(-3, 3, 30))
    th = rng.uniform(0.1, 6, 30)
    tm = rng.uniform(0, 6, 30)
    assert monopole_residual(c, th, S1, P) < 1e-8
    assert omega0_residual(c, th, tm, S1, P) < 1e-8


def test_semiflat_embedding():
    rng = np.random.default_rng(8)
    c = rng.uniform(0.05, 0.4, 20) * np.exp(1j * rng.uniform(-3, 3, 20))
    t = (rng.uniform(-1, 1, 20), rng.uniform(0, 6, 20))
    w = embedding_pullback(c, t, S1, ModelParams(0.8))
    assert np.max(np.abs(w.coeffs - canonical_form((20,)).coeffs)) < 1e-13


def test_semiflat_gibbons_hawking_is_the_semiflat_metric():
    rng = np.random.default_rng(9)
    P = ModelParams(1.1)
    c = rng.uniform(0.05, 0.4, 20) * np.exp(1j * rng.uniform(-3, 3, 20))
    t = (rng.uniform(-1, 1, 20), rng.uniform(0, 6, 20))
    lam = invariant_eval(S1, c).S1 - np.log(np.abs(c))
    te = 2 * np.pi * t[0] / lam
    K = angle_frame_jacobian(c, te, S1)
    g_sf = np.swapaxes(K, -1, -2) @ semiflat_metric_matrix(c, t, S1, P).g @ K
    g_gh = gibbons_hawking_metric(c, S1, P, te, part="sf").g
    assert np.max(np.abs(g_sf - 2 * np.pi * flip_theta_m(g_gh))) < 1e-12


def test_gibbons_hawking_determinant():
    P = ModelParams(0.7)
    c, th = 0.2 * np.exp(0.4j), 1.9
    V = potential_lattice(c, th, S1, P)
    g = gibbons_hawking_metric(c, S1, P, th).g
    assert np.linalg.det(g) == pytest.approx(V**2 / ((2 * np.pi * P.R) ** 2 * (2 * np.pi) ** 2), rel=1e-10)
    assert np.all(np.linalg.eigvalsh(g) > 0)


def test_positivity_margin_and_axis_minimum():
    v, t = axis_minimum()
    assert v == pytest.approx(2 * np.log(2), abs=1e-10)
    assert t == pytest.approx(np.pi, abs=1e-4)
    assert positivity_margin(S0) == pytest.approx(2 * np.log(2), abs=1e-10)
    assert positivity_margin(HarmonicInvariant((-2.0,))) == pytest.approx(2 * np.log(2) - 2)
    P = ModelParams(2.0)
    assert potential_axis_margin(S0, P) == pytest.approx(2 * np.log(2) + kappa0(2.0))


def test_error_paths():
    P = ModelParams()
    with pytest.raises(PositivityError):
        gibbons_hawking_metric(0j, HarmonicInvariant((-2.0,)), P, np.pi)
    with pytest.raises(DomainError):
        gibbons_hawking_metric(0j, S0, P, np.pi)
    with pytest.raises(SingularityError):
        ov_potential(0j, S0, P, 0.0)
    with pytest.raises(NumericalFailure):
        bessel_series(0.01, 1.0, 1.0, max_terms=10)
    with pytest.raises(NumericalFailure):
        potential_instanton(0.01, 1.0, ModelParams(max_terms=10))
    f = ov_potential(0j, S0, P, 1.0)
    assert np.isfinite(f.V) and np.isnan(f.V_sf)
