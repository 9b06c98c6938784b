"""Twistor family of the Ooguri-Vafa space: semi-flat Darboux coordinates, the
Cauchy integral solver for ray jumps, the instanton-corrected magnetic
coordinate, and extraction of the hyperkähler metric from the family.

Forms live in the local-model angle frame (c1, c2, theta_m, theta_e). The
Ooguri-Vafa fiber angle is -theta_m there, which is why the extracted metric
matches the Gibbons-Hawking one only after reversing theta_m.

Contours. With Z_e = -i c, chi_e(zeta) = exp[pi R (c/zeta + zeta conj(c)) + i theta_e],
so chi_e decays fastest along the ray through -c/|c| (called l+) and chi_e^-1
along the ray through +c/|c| (l-). On a ray zeta' = d e^s we have
dzeta'/zeta' = ds and |chi_e^{+-1}| = exp(-2 pi R |c| cos(alpha) cosh s), alpha
being the tilt of d away from the steepest direction; the trapezoid rule in s
then converges geometrically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import ContourError, ModelViolationError, NumericalFailure, PositivityError
from .geometry import FRAME_ACTION_ANGLE, FormAtPoint, MetricAtPoint, triple_to_metric
from .holomorphic import central_charges
from .ooguri_vafa import ov_connection, potential_lattice
from .scalar_kernels import (
    HarmonicInvariant,
    ModelParams,
    bessel_k0k1,
    branch_arg,
    invariant_eval,
)

TWO_PI = 2.0 * np.pi
FRAME_TWISTOR = FRAME_ACTION_ANGLE

DC = np.array([1.0, 1.0j, 0.0, 0.0])
DCBAR = np.array([1.0, -1.0j, 0.0, 0.0])
DTHETA_M = np.array([0.0, 0.0, 1.0, 0.0])
DTHETA_E = np.array([0.0, 0.0, 0.0, 1.0])

DEFAULT_MARGIN = 0.2
# exponent below which chi_e^{+-1} is dropped: exp(-50) ~ 2e-22
_DECAY_CUTOFF = 50.0
_MAX_HALVINGS = 8

# Across l+ (left side zeta e^{+i delta} over right side zeta e^{-i delta}) the
# correction factor jumps by (1 - chi_e(zeta))**GMN_JUMP_EXPONENT. Fixed by the
# Cauchy-integral oracle; see tests/test_twistor.py.
GMN_JUMP_EXPONENT = -1


class NearContourWarning(UserWarning):
    """A Cauchy integral was evaluated close to its contour."""


def _wrap(angle):
    return (np.asarray(angle) + np.pi) % TWO_PI - np.pi


def _one(v):
    return FormAtPoint(1, FRAME_TWISTOR, np.asarray(v, dtype=complex))


@dataclass(frozen=True)
class TwistorParameter:
    zeta: complex

    def __post_init__(self):
        if self.zeta == 0 or not np.isfinite(self.zeta):
            raise ContourError("zeta must be a finite non-zero complex number")

    def bps_distance(self, c) -> float:
        """Angular distance to the rays where Re(c/zeta) = 0."""
        phi = np.angle(c)
        return float(min(abs(_wrap(np.angle(self.zeta) - phi - s * np.pi / 2)) for s in (1, -1)))

    def contour_distance(self, c) -> float:
        return float(min(abs(_wrap(np.angle(self.zeta) - np.angle(d))) for d in contour_directions(c)))


def contour_directions(c):
    """(l+, l-) directions: the rays through -c/|c| and +c/|c|."""
    u = c / abs(c)
    return -u, u


# ---------------------------------------------------------------------------
# contours and quadrature


@dataclass(frozen=True)
class RayContour:
    """Trapezoid nodes zeta' = direction * e^s on a symmetric s-window."""

    direction: complex
    step: float
    s_max: float

    @property
    def s(self):
        k = int(np.floor(self.s_max / self.step))
        return self.step * np.arange(-k, k + 1)

    @property
    def nodes(self):
        return self.direction * np.exp(self.s)

    @property
    def weights(self):
        return np.full(self.s.shape, self.step)


@dataclass
class QuadratureStats:
    nodes: int = 0
    error_estimate: float = 0.0

    def add(self, nodes, err):
        self.nodes += int(nodes)
        self.error_estimate = max(self.error_estimate, float(err))


def _tilt(c, direction, sign):
    """cos of the angle between a contour direction and the steepest-decay ray."""
    steepest = -c / abs(c) if sign > 0 else c / abs(c)
    return float(np.cos(_wrap(np.angle(direction) - np.angle(steepest))))


def _plan(c, R, zeta, direction, sign, tol):
    cosa = _tilt(c, direction, sign)
    if cosa <= 1e-3:
        raise ContourError(
            "divergent integrand: chi_e^{%+d} does not decay along this contour" % sign
        )
    a = TWO_PI * R * abs(c) * cosa
    s_max = float(np.arccosh(max(1.0, _DECAY_CUTOFF / a)))
    # analyticity strip: the kernel pole and the half-width where decay is lost
    alpha = np.arccos(min(1.0, cosa))
    width = np.pi / 2 - alpha
    if zeta is not None:
        width = min(width, abs(_wrap(np.angle(zeta) - np.angle(direction))))
    step = min(0.25, TWO_PI * width / np.log(1.0 / tol))
    return step, max(s_max, step)


def _trapezoid(integrand, direction, step, s_max, tol, stats, label):
    """Trapezoid rule on zeta' = direction e^s, halving the step until stable."""
    prev = None
    for _ in range(_MAX_HALVINGS):
        contour = RayContour(direction, step, s_max)
        zp = contour.nodes
        val = step * np.sum(integrand(zp), axis=-1)
        if prev is not None:
            err = float(np.max(np.abs(val - prev)))
            if err <= tol * max(1.0, float(np.max(np.abs(val)))):
                stats.add(zp.size, err)
                return val
        prev = val
        step *= 0.5
    raise NumericalFailure(f"trapezoid rule on {label} did not converge")


def _chi_e_power(c, theta_e, R, zp, sign):
    """chi_e(zeta')**sign evaluated directly in the exponent."""
    return np.exp(sign * (np.pi * R * (c / zp + zp * np.conj(c)) + 1j * theta_e))


def _dlog_chi_e(R, zp):
    """Components of dlog chi_e(zeta') = i dtheta_e + pi R (dc/zeta' + zeta' dcbar)."""
    zp = np.asarray(zp)[..., None]
    return 1j * DTHETA_E + np.pi * R * (DC / zp + zp * DCBAR)


# ---------------------------------------------------------------------------
# Darboux coordinates


@dataclass(frozen=True)
class DarbouxPair:
    chi_e: complex
    chi_m: complex
    dlog_chi_e: FormAtPoint
    dlog_chi_m: FormAtPoint


def _lam_mu(c, S, chart):
    inv = invariant_eval(S, c)
    return inv.S1 - np.log(abs(c)), inv.S2 + branch_arg(c, chart)


def darboux_sf(c, theta_m, theta_e, S: HarmonicInvariant, params: ModelParams, zeta,
               chart: str = "principal") -> DarbouxPair:
    """Semi-flat chi_e, chi_m and their log-differentials (closed forms)."""
    zeta = TwistorParameter(complex(zeta)).zeta
    c = complex(c)
    if c == 0:
        raise ContourError("c = 0 has no semi-flat coordinates")
    R = params.R
    Zm = complex(central_charges(c, S, None, chart).Z_m)
    chi_m = np.exp(1j * np.pi * R * Zm / zeta - 1j * theta_m - 1j * np.pi * R * zeta * np.conj(Zm))
    chi_e = np.exp(np.pi * R * (c / zeta + zeta * np.conj(c)) + 1j * theta_e)
    lam, mu = _lam_mu(c, S, chart)
    dZm = (lam - 1j * mu) / TWO_PI * DC
    dZm_bar = (lam + 1j * mu) / TWO_PI * DCBAR
    dlm = 1j * np.pi * R * dZm / zeta - 1j * DTHETA_M - 1j * np.pi * R * zeta * dZm_bar
    dle = 1j * DTHETA_E + np.pi * R * (DC / zeta + zeta * DCBAR)
    return DarbouxPair(complex(chi_e), complex(chi_m), _one(dle), _one(dlm))


def semiflat_family_from_darboux(c, theta_m, theta_e, S, params, zeta, chart="principal"):
    """(1/2piR) dlog chi_m ^ dlog chi_e for the semi-flat coordinates."""
    d = darboux_sf(c, theta_m, theta_e, S, params, zeta, chart)
    return (d.dlog_chi_m ^ d.dlog_chi_e).scale(1.0 / (TWO_PI * params.R))


def semiflat_laurent_coefficients(c, S, params, chart="principal"):
    """Omega and omega_sf in the twistor frame, from their defining formulas.

    Omega = dZ_m ^ dtheta_e - i dc ^ dtheta_m and
    omega_sf = pi R Re(dZ_m ^ dconj(Z_e)) + (1/2piR) dtheta_m ^ dtheta_e.
    """
    c = complex(c)
    R = params.R
    lam, mu = _lam_mu(c, S, chart)
    dZm = _one((lam - 1j * mu) / TWO_PI * DC)
    dZe_bar = _one(1j * DCBAR)
    omega = (dZm ^ _one(DTHETA_E)) - (_one(1j * DC) ^ _one(DTHETA_M))
    kahler = (dZm ^ dZe_bar).real.scale(np.pi * R) + (_one(DTHETA_M) ^ _one(DTHETA_E)).scale(1 / (TWO_PI * R))
    return omega, kahler


def semiflat_family_direct(c, S, params, zeta, chart="principal") -> FormAtPoint:
    """-Omega/2zeta + omega_sf + zeta conj(Omega)/2."""
    om, w = semiflat_laurent_coefficients(c, S, params, chart)
    return om.scale(-0.5 / zeta) + w.scale(1.0 + 0j) + om.conj().scale(0.5 * zeta)


# ---------------------------------------------------------------------------
# Cauchy-Plemelj-Sokhotskii solver


def _cquad(f, a, b, **kw):
    opts = dict(limit=500, epsabs=1e-13, epsrel=1e-12)
    opts.update(kw)
    re = quad(lambda s: float(np.real(f(s))), a, b, **opts)[0]
    im = quad(lambda s: float(np.imag(f(s))), a, b, **opts)[0]
    return re + 1j * im


def cps_solve(contour, jump, z, margin: float = DEFAULT_MARGIN) -> complex:
    """f(z) = (1/2pi i) int_contour jump(t) / (t - z) dt on a ray from 0 to infinity.

    ``contour`` is a RayContour or a direction; ``jump`` is called with points
    of the ray. Close to the ray the smooth part of the integrand is handled
    by subtracting jump at the nearest ray point and integrating the remaining
    logarithm analytically; a NearContourWarning flags the degraded bound.
    """
    d = contour.direction if isinstance(contour, RayContour) else complex(contour)
    d = d / abs(d)
    w = complex(z) / d
    if w == 0:
        raise ContourError("z = 0 is the endpoint of the contour")

    def phi(s):
        return jump(d * s)

    x0 = w.real
    near = x0 > 0 and abs(np.angle(w)) < margin
    if near:
        warnings.warn(
            f"Cauchy integral evaluated {abs(np.angle(w)):.2e} rad from its contour",
            NearContourWarning,
            stacklevel=2,
        )
        p0 = phi(x0)
        total = _cquad(lambda s: (phi(s) - p0) / (s - w), 0.0, 2 * x0, points=[x0])
        total += _cquad(lambda s: phi(s) / (s - w), 2 * x0, np.inf)
        total += p0 * (np.log(2 * x0 - w) - np.log(-w))
    else:
        total = _cquad(lambda s: phi(s) / (s - w), 0.0, np.inf)
    return total / (2j * np.pi)


@dataclass(frozen=True)
class JumpEstimate:
    raw: complex  # f(z e^{i delta}) - f(z e^{-i delta})
    raw_double: complex  # same at 2 delta
    extrapolated: complex  # 2 raw - raw_double, the delta -> 0 limit to O(delta^2)


def boundary_jump(func, z, delta: float) -> JumpEstimate:
    """Left-minus-right boundary jump of ``func`` across the ray through z."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearContourWarning)
        j1 = func(z * np.exp(1j * delta)) - func(z * np.exp(-1j * delta))
        j2 = func(z * np.exp(2j * delta)) - func(z * np.exp(-2j * delta))
    return JumpEstimate(complex(j1), complex(j2), complex(2 * j1 - j2))


# ---------------------------------------------------------------------------
# the instanton correction


def _check_zeta(c, zeta, margin, directions):
    for d in directions:
        gap = abs(_wrap(np.angle(zeta) - np.angle(d)))
        if gap < margin:
            raise ContourError(
                f"zeta lies {gap:.3g} rad from an integration contour (margin {margin})"
            )


def _resolve_directions(c, directions):
    lp, lm = contour_directions(c)
    if directions is not None:
        lp = directions[0] if directions[0] is not None else lp
        lm = directions[1] if directions[1] is not None else lm
    return lp, lm


def _log_integrand(c, theta_e, R, zeta, sign):
    def f(zp):
        x = _chi_e_power(c, theta_e, R, zp, sign)
        return sign * 1j / (4 * np.pi) * (zp + zeta) / (zp - zeta) * np.log1p(-x)

    return f


def gmn_log_correction(c, theta_e, params: ModelParams, zeta, margin: float = DEFAULT_MARGIN,
                       tol: float = 1e-13, directions=None, method: str = "trapezoid",
                       stats: QuadratureStats | None = None) -> complex:
    """log of the multiplicative correction to chi_m:

        (i/4pi) int_{l+} dzeta'/zeta' (zeta'+zeta)/(zeta'-zeta) ln(1 - chi_e(zeta'))
      - (i/4pi) int_{l-} dzeta'/zeta' (zeta'+zeta)/(zeta'-zeta) ln(1 - chi_e(zeta')^-1)

    ``method="cps"`` evaluates the l+ part through :func:`cps_solve` using
    (zeta'+zeta)/(zeta'(zeta'-zeta)) = 2/(zeta'-zeta) - 1/zeta', which stays
    accurate for zeta next to l+.
    """
    c = complex(c)
    zeta = TwistorParameter(complex(zeta)).zeta
    stats = stats if stats is not None else QuadratureStats()
    R = params.R
    lp, lm = _resolve_directions(c, directions)
    if method == "trapezoid":
        _check_zeta(c, zeta, margin, (lp, lm))
    elif method == "cps":
        _check_zeta(c, zeta, margin, (lm,))
    else:
        raise ValueError(f"unknown method {method!r}")
    total = 0j
    for sign, d in ((1, lp), (-1, lm)):
        if sign > 0 and method == "cps":
            continue
        step, s_max = _plan(c, R, zeta, d, sign, tol)
        total += _trapezoid(_log_integrand(c, theta_e, R, zeta, sign), d, step, s_max, tol, stats,
                            "l+" if sign > 0 else "l-")
    if method == "cps":

        def log_jump(zp):
            return np.log1p(-_chi_e_power(c, theta_e, R, zp, 1))

        step, s_max = _plan(c, R, None, lp, 1, tol)
        regular = _trapezoid(lambda zp: log_jump(zp), lp, step, s_max, tol, stats, "l+ regular")
        total += -cps_solve(lp, log_jump, zeta, margin) - 1j / (4 * np.pi) * regular
    return complex(total)


def gmn_correction(c, theta_e, S, params, zeta, **kw) -> complex:
    """The multiplicative correction factor for chi_m (independent of S)."""
    return complex(np.exp(gmn_log_correction(c, theta_e, params, zeta, **kw)))


def gmn_dlog_correction(c, theta_e, params, zeta, margin=DEFAULT_MARGIN, tol=1e-13,
                        directions=None, stats=None) -> FormAtPoint:
    """d of the log-correction, differentiating under the integral sign:

        -(i/4pi) sum_{+-} int ds (zeta'+zeta)/(zeta'-zeta) chi^{+-1}/(1 - chi^{+-1}) dlog chi_e(zeta')
    """
    c = complex(c)
    zeta = TwistorParameter(complex(zeta)).zeta
    stats = stats if stats is not None else QuadratureStats()
    R = params.R
    lp, lm = _resolve_directions(c, directions)
    _check_zeta(c, zeta, margin, (lp, lm))
    total = np.zeros(4, dtype=complex)
    for sign, d in ((1, lp), (-1, lm)):
        step, s_max = _plan(c, R, zeta, d, sign, tol)

        def integrand(zp, sign=sign):
            x = _chi_e_power(c, theta_e, R, zp, sign)
            k = (zp + zeta) / (zp - zeta) * x / (1.0 - x)
            return -1j / (4 * np.pi) * (k[:, None] * _dlog_chi_e(R, zp)).T

        total += _trapezoid(integrand, d, step, s_max, tol, stats, "dlog l+" if sign > 0 else "dlog l-")
    return _one(total)


def gmn_twistor_form(c, theta_m, theta_e, S, params, zeta, chart="principal", stats=None,
                     **kw) -> FormAtPoint:
    """(1/2piR) dlog chi_m ^ dlog chi_e with the instanton-corrected chi_m."""
    d = darboux_sf(c, theta_m, theta_e, S, params, zeta, chart)
    dlm = d.dlog_chi_m + gmn_dlog_correction(c, theta_e, params, zeta, stats=stats, **kw)
    return (dlm ^ d.dlog_chi_e).scale(1.0 / (TWO_PI * params.R))


def corrected_twistor_form(c, theta_m, theta_e, S, params, zeta, chart="principal") -> FormAtPoint:
    """(1/2piR) xi_m ^ xi_e with
    xi_m = -i dtheta_m + 2pi i A_0 + pi i V_0 (dc/zeta - zeta dcbar) and
    xi_e = i dtheta_e + pi R (dc/zeta + zeta dcbar)."""
    c = complex(c)
    zeta = TwistorParameter(complex(zeta)).zeta
    R = params.R
    V = float(potential_lattice(c, theta_e, S, params))
    a = ov_connection(c, S, params, theta_e, chart).coeffs  # (c1, c2, theta_e, theta_m)
    A = np.array([a[0], a[1], a[3], a[2]])
    xi_m = -1j * DTHETA_M + 2j * np.pi * A + 1j * np.pi * V * (DC / zeta - zeta * DCBAR)
    xi_e = 1j * DTHETA_E + np.pi * R * (DC / zeta + zeta * DCBAR)
    return (_one(xi_m) ^ _one(xi_e)).scale(1.0 / (TWO_PI * R))


# ---------------------------------------------------------------------------
# Bessel identities along the contours


def _bessel_exp_sums(x, theta, n_max=100000):
    """sum_{n>0} e^{i n theta} K0(n x) and sum_{n>0} e^{i n theta} K1(n x)."""
    s0 = 0j
    s1 = 0j
    for n in range(1, n_max + 1):
        if n * x > 45.0:
            break
        k0, k1 = bessel_k0k1(n * x)
        ph = np.exp(1j * n * theta)
        s0 += ph * k0
        s1 += ph * k1
    return s0, s1


@dataclass
class BesselIdentityReport:
    quadrature: np.ndarray
    series: np.ndarray
    nodes: int

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.quadrature - self.series)))


def contour_bessel_identities(c, theta_e, params, tol=1e-13) -> BesselIdentityReport:
    """Six contour integrals of chi^{+-1}/(1 - chi^{+-1}) against {1, zeta', 1/zeta'}
    (in dzeta'/zeta'), next to their Bessel-series values."""
    c = complex(c)
    R = params.R
    phi = np.angle(c)
    stats = QuadratureStats()
    quads = []
    for sign, d in zip((1, -1), contour_directions(c)):
        step, s_max = _plan(c, R, None, d, sign, tol)

        def integrand(zp, sign=sign):
            x = _chi_e_power(c, theta_e, R, zp, sign)
            w = x / (1.0 - x)
            return np.stack([w, w * zp, w / zp])

        quads.append(_trapezoid(integrand, d, step, s_max, tol, stats, "bessel"))
    x = TWO_PI * R * abs(c)
    p0, p1 = _bessel_exp_sums(x, theta_e)
    m0, m1 = _bessel_exp_sums(x, -theta_e)
    e = np.exp(1j * phi)
    series = np.array(
        [2 * p0, -2 * e * p1, -2 / e * p1, 2 * m0, 2 * e * m1, 2 / e * m1]
    )
    return BesselIdentityReport(np.concatenate(quads), series, stats.nodes)


# ---------------------------------------------------------------------------
# metric extraction


@dataclass
class LaurentFit:
    omega: FormAtPoint  # Omega_c (holomorphic symplectic form)
    kahler: FormAtPoint  # omega_c
    residual: float
    zetas: np.ndarray


def sample_zetas(c, n: int = 12):
    """Unit-circle samples offset by half a spacing from both contours."""
    base = np.angle(c) + np.pi / n
    return np.exp(1j * (base + TWO_PI * np.arange(n) / n))


def laurent_fit(values, zetas) -> LaurentFit:
    """Least-squares fit of values(zeta) = -Omega/2zeta + omega + zeta conj(Omega)/2."""
    zetas = np.asarray(zetas, dtype=complex)
    P = np.stack([v.coeffs for v in values])
    M = np.stack([1 / zetas, np.ones_like(zetas), zetas], axis=-1)
    coef, *_ = np.linalg.lstsq(M, P, rcond=None)
    resid = float(np.max(np.abs(M @ coef - P)))
    frame = values[0].frame
    om = FormAtPoint(2, frame, -2 * coef[0])
    kahler = FormAtPoint(2, frame, coef[1])
    # the zeta^1 coefficient must be conj(Omega)/2
    resid = max(resid, float(np.max(np.abs(coef[2] - np.conj(om.coeffs) / 2))))
    resid = max(resid, float(np.max(np.abs(kahler.coeffs.imag))))
    return LaurentFit(om, kahler, resid, zetas)


@dataclass
class ExtractedMetric:
    metric: MetricAtPoint
    triple: tuple
    complex_structures: tuple
    fit: LaurentFit
    nodes: int
    j_squared_residual: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def g(self):
        return self.metric.g


def extract_metric(c, theta_m, theta_e, S, params, chart="principal", n_zeta: int = 12,
                   route: str = "gmn", fit_tol: float = 1e-6) -> ExtractedMetric:
    """Metric of the hyperkähler triple read off the Laurent coefficients of the
    twistor family; equals 2pi times the Gibbons-Hawking metric with theta_m reversed."""
    c = complex(c)
    lam, _ = _lam_mu(c, S, chart)
    if lam <= 0:
        raise PositivityError("S1 - ln|c| <= 0 at this point")
    V = float(potential_lattice(c, theta_e, S, params))
    if V <= 0:
        raise PositivityError(f"potential is not positive (V = {V:.6g})")
    zetas = sample_zetas(c, n_zeta)
    stats = QuadratureStats()
    if route == "gmn":
        values = [gmn_twistor_form(c, theta_m, theta_e, S, params, z, chart, stats=stats) for z in zetas]
    elif route == "xi":
        values = [corrected_twistor_form(c, theta_m, theta_e, S, params, z, chart) for z in zetas]
    elif route == "semiflat":
        values = [semiflat_family_from_darboux(c, theta_m, theta_e, S, params, z, chart) for z in zetas]
    else:
        raise ValueError(f"unknown route {route!r}")
    fit = laurent_fit(values, zetas)
    if fit.residual > fit_tol:
        raise ModelViolationError(f"Laurent fit residual {fit.residual:.3e} exceeds {fit_tol}")
    W1 = fit.omega.real
    W2 = fit.omega.imag
    W3 = fit.kahler.real
    tm = triple_to_metric(W1, W2, W3)
    return ExtractedMetric(tm.metric, (W1, W2, W3), tm.complex_structures, fit, stats.nodes,
                           tm.j_squared_residual)


def flip_theta_m(g_ov):
    """Re-express a metric in the Ooguri-Vafa frame (c1, c2, theta_e, theta_m) in the
    twistor frame (c1, c2, theta_m', theta_e), where theta_m' = -theta_m."""
    Q = np.zeros((4, 4))
    Q[0, 0] = Q[1, 1] = 1.0
    Q[2, 3] = 1.0
    Q[3, 2] = -1.0
    return Q.T @ np.asarray(g_ov) @ Q


def triple_wedge_residual(triple) -> float:
    """max_ij |w_i ^ w_j - delta_ij vol| with vol the mean of the three squares."""
    M = np.array([[float(np.real((a ^ b).top())) for b in triple] for a in triple])
    vol = float(np.mean(np.diag(M)))
    return float(np.max(np.abs(M - vol * np.eye(3))))
