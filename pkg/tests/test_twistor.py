import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from focusfocus import twistor as tw
from focusfocus.errors import ContourError, ModelViolationError, PositivityError
from focusfocus.geometry import FRAME_ACTION_ANGLE, change_frame
from focusfocus.holomorphic import holomorphic_form_angles
from focusfocus.local_model import angle_frame_jacobian, fiber_times
from focusfocus.ooguri_vafa import gibbons_hawking_metric
from focusfocus.scalar_kernels import HarmonicInvariant, ModelParams
from focusfocus.semiflat import semiflat_form, semiflat_metric_matrix

S0 = HarmonicInvariant.zero()
S1 = HarmonicInvariant((0.1,))
S2 = HarmonicInvariant((0.2 - 0.1j, 0.3j))
P = ModelParams(R=1.0)


def _off_contour(c, k=0):
    return np.exp(1j * (np.angle(c) + 0.9 + 0.7 * k)) * (0.5 + 0.4 * k)


# ---------------------------------------------------------------------------
# semi-flat family


@given(st.floats(0.03, 0.45), st.floats(-3, 3), st.floats(0, 6), st.floats(0, 6),
       st.floats(0.3, 3), st.floats(-3, 3))
@settings(max_examples=40, deadline=None)
def test_semiflat_family_two_ways(r, a, tm, te, zr, za):
    c = r * np.exp(1j * a)
    z = zr * np.exp(1j * za)
    lhs = tw.semiflat_family_from_darboux(c, tm, te, S2, P, z)
    rhs = tw.semiflat_family_direct(c, S2, P, z)
    assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 1e-9 * max(1.0, np.max(np.abs(rhs.coeffs)))


def test_laurent_coefficients_are_the_local_model_forms():
    c, tm, te = 0.12 * np.exp(2.7j), 0.4, 1.3
    P2 = ModelParams(R=1.7)
    om, w = tw.semiflat_laurent_coefficients(c, S2, P2)
    assert np.allclose(om.coeffs, holomorphic_form_angles(c, te, S2).coeffs, atol=1e-14)
    t = fiber_times(c, tm, te, S2)
    pulled = change_frame(semiflat_form(c, t, S2, P2), angle_frame_jacobian(c, te, S2), FRAME_ACTION_ANGLE)
    assert np.allclose(w.coeffs, pulled.coeffs, atol=1e-13)


def test_semiflat_extraction_reproduces_semiflat_metric():
    c, tm, te = 0.5 + 0j, 0.3, 0.0
    em = tw.extract_metric(c, tm, te, S0, P, route="semiflat")
    K = angle_frame_jacobian(c, te, S0)
    t = fiber_times(c, tm, te, S0)
    expected = K.T @ semiflat_metric_matrix(c, t, S0, P).g @ K
    assert np.allclose(em.g, expected, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(em.g) > 0)


# ---------------------------------------------------------------------------
# Cauchy integrals


def _mp_cauchy(z):
    z = mp.mpc(z)
    return complex(mp.quad(lambda t: mp.exp(-t) / (t - z), [0, 1, mp.inf]) / (2j * mp.pi))


@pytest.mark.parametrize("z", [0.5 + 0.5j, -1 + 0.1j, 2.0 - 0.3j, 0.3j, 1.0 + 0.05j])
def test_cps_solve_against_mpmath(z):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", tw.NearContourWarning)
        val = tw.cps_solve(1.0, lambda t: np.exp(-t), z)
    assert val == pytest.approx(_mp_cauchy(z), abs=1e-10)


def test_cps_solve_rotated_contour_and_warning():
    d = np.exp(2.0j)
    with pytest.warns(tw.NearContourWarning):
        tw.cps_solve(d, lambda t: np.exp(-t / d), d * (1 + 0.01j))
    val = tw.cps_solve(d, lambda t: np.exp(-t / d), d * (0.5 + 0.5j))
    assert val == pytest.approx(_mp_cauchy(0.5 + 0.5j), abs=1e-10)


def test_cps_jump_converges_linearly_and_extrapolates():
    phi = lambda t: np.exp(-t) * np.cos(t)
    z = 0.8
    err = []
    for delta in (1e-3, 5e-4):
        j = tw.boundary_jump(lambda w: tw.cps_solve(1.0, phi, w), z, delta)
        err.append(abs(j.raw - phi(z)))
        assert abs(j.extrapolated - phi(z)) < 1e-6
    assert err[0] / err[1] == pytest.approx(2.0, rel=0.05)


def test_gmn_jump_exponent_is_fixed_by_the_cauchy_oracle():
    c, te = 0.1 * np.exp(0.4j), 1.1
    z = 0.7 * tw.contour_directions(c)[0]
    j = tw.boundary_jump(lambda w: tw.gmn_log_correction(c, te, P, w, method="cps"), z, 1e-4)
    chi = np.exp(np.pi * P.R * (c / z + z * np.conj(c)) + 1j * te)
    assert tw.GMN_JUMP_EXPONENT == -1
    assert abs(np.exp(j.extrapolated) - (1 - chi) ** -1) < 1e-7
    assert abs(np.exp(j.extrapolated) - (1 - chi)) > 1e-2


# ---------------------------------------------------------------------------
# instanton correction


def test_cps_and_trapezoid_routes_agree_off_contour():
    c, te = 0.15 * np.exp(-1.0j), 2.0
    for k in range(3):
        z = _off_contour(c, k)
        a = tw.gmn_log_correction(c, te, P, z)
        b = tw.gmn_log_correction(c, te, P, z, method="cps")
        assert a == pytest.approx(b, abs=1e-10)


def test_contour_can_be_tilted_inside_its_half_plane():
    c, te = 0.12 * np.exp(0.3j), 0.8
    z = np.exp(1j * (np.angle(c) + np.pi / 2))  # on a BPS ray, far from both contours
    base = tw.gmn_log_correction(c, te, P, z)
    lp, lm = tw.contour_directions(c)
    tilted = tw.gmn_log_correction(c, te, P, z, directions=(lp * np.exp(-0.4j), lm * np.exp(-0.4j)))
    assert tilted == pytest.approx(base, abs=1e-11)
    with pytest.raises(ContourError):
        tw.gmn_log_correction(c, te, P, z, directions=(lp * np.exp(1.6j), None))


def test_correction_near_contour_and_far_away():
    c = 0.1 + 0.1j
    with pytest.raises(ContourError):
        tw.gmn_correction(c, 0.3, S0, P, tw.contour_directions(c)[0] * np.exp(0.05j))
    big = ModelParams(R=50.0)
    assert tw.gmn_correction(c, 0.3, S0, big, _off_contour(c)) == pytest.approx(1.0, abs=1e-14)
    # no dependence on the invariant
    assert tw.gmn_correction(c, 0.3, S0, P, _off_contour(c)) == tw.gmn_correction(c, 0.3, S2, P, _off_contour(c))


def test_bessel_identities_against_mpmath_series():
    c, te, R = 0.07 * np.exp(1.9j), 2.3, 1.4
    rep = tw.contour_bessel_identities(c, te, ModelParams(R))
    x = 2 * mp.pi * R * abs(c)

    def ser(k, sign):
        return complex(mp.nsum(lambda n: mp.expj(sign * n * te) * mp.besselk(k, n * x), [1, mp.inf]))

    e = np.exp(1j * np.angle(c))
    ref = [2 * ser(0, 1), -2 * e * ser(1, 1), -2 / e * ser(1, 1), 2 * ser(0, -1), 2 * e * ser(1, -1), 2 / e * ser(1, -1)]
    assert np.max(np.abs(rep.quadrature - np.array(ref))) < 1e-11
    assert rep.residual < 1e-11 and rep.nodes > 0


@pytest.mark.parametrize("S,chart", [(S0, "principal"), (S2, "principal"), (S2, "positive")])
def test_two_routes_to_the_corrected_family(S, chart):
    c, tm, te = 0.1 * np.exp(-2.2j), 0.7, 4.0
    for k in range(3):
        z = _off_contour(c, k)
        st_ = tw.QuadratureStats()
        a = tw.gmn_twistor_form(c, tm, te, S, P, z, chart, stats=st_)
        b = tw.corrected_twistor_form(c, tm, te, S, P, z, chart)
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-10
        assert st_.nodes > 0


def test_reality_condition():
    c, tm, te = 0.2 * np.exp(1.0j), 0.3, 2.0
    z = _off_contour(c)
    a = tw.gmn_twistor_form(c, tm, te, S1, P, z)
    b = tw.gmn_twistor_form(c, tm, te, S1, P, -1 / np.conj(z))
    assert np.allclose(b.coeffs, np.conj(a.coeffs), atol=1e-12)


# ---------------------------------------------------------------------------
# metric extraction


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_extracted_metric_is_gibbons_hawking(R):
    Pr = ModelParams(R)
    c, tm, te = 0.08 * np.exp(0.5j), 1.0, 2.5
    em = tw.extract_metric(c, tm, te, S1, Pr)
    gh = gibbons_hawking_metric(c, S1, Pr, te).g
    assert np.max(np.abs(em.g - 2 * np.pi * tw.flip_theta_m(gh))) < 1e-9
    assert em.fit.residual < 1e-10
    assert tw.triple_wedge_residual(em.triple) < 1e-9


def test_extraction_failures():
    c = 0.3 + 0j
    with pytest.raises(PositivityError):
        tw.extract_metric(c, 0.0, 1.0, HarmonicInvariant((-3.0,)), P)

    def bent(values_fn):
        def inner(c, tm, te, S, params, z, chart="principal", stats=None, **kw):
            form = values_fn(c, tm, te, S, params, z, chart, stats=stats, **kw)
            return form + form.scale(0.01 * z**2)
        return inner

    orig = tw.gmn_twistor_form
    tw.gmn_twistor_form = bent(orig)
    try:
        with pytest.raises(ModelViolationError):
            tw.extract_metric(0.1 + 0.1j, 0.0, 1.0, S0, P)
    finally:
        tw.gmn_twistor_form = orig


def test_twistor_parameter():
    with pytest.raises(ContourError):
        tw.TwistorParameter(0j)
    p = tw.TwistorParameter(1j)
    assert p.bps_distance(1.0) == pytest.approx(0.0)
    assert p.contour_distance(1.0) == pytest.approx(np.pi / 2)
