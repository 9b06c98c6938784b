"""The generalized Ooguri-Vafa space: potential, connection, the sigma angle
correction, the Gibbons-Hawking metric and the positivity condition on the
theta_e-axis.

Frame convention: forms and metrics live in (c1, c2, theta_e, theta_m). The
Gibbons-Hawking 3-space has flat coordinates (c1, c2, y) with y = theta_e/(2piR).

Normalization of the potential. The lattice sum

    V = (R/4pi) [ sum_n (1/sqrt(R^2|c|^2 + (theta_e/2pi + n)^2) - kappa(n)) + 2 S1 + 2 kappa0(R) ]

with kappa0(R) = ln(R/2) + gamma is exactly equal to V_sf + V_inst, where
V_sf = (R/2pi)(S1 - ln|c|) and V_inst = (R/pi) sum_{n>0} cos(n theta_e) K0(2piRn|c|).
Without kappa0 the two sides differ by the constant (R/2pi) kappa0(R).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DegenerateLatticeError,
    DomainError,
    NumericalFailure,
    PositivityError,
    SingularityError,
)
from .geometry import FormAtPoint, Frame, MetricAtPoint
from .local_model import ActionAngle
from .scalar_kernels import (
    EULER_GAMMA,
    HarmonicInvariant,
    ModelParams,
    bessel_k0k1,
    branch_arg,
    invariant_eval,
    regularized_theta_sum,
)

TWO_PI = 2.0 * np.pi
FRAME_OV = Frame(("c1", "c2", "theta_e", "theta_m"))

# Bessel series stop once K0, K1 of the argument fall below this
_SERIES_TOL = 1e-18
_MIN_TERMS = 5


@dataclass(frozen=True)
class OVPoint:
    c1: float
    c2: float
    theta_e: float
    theta_m: float = 0.0
    chart: str = "principal"

    @property
    def c(self):
        return complex(self.c1, self.c2)


@dataclass(frozen=True)
class OoguriVafaField:
    V: object
    V_sf: object
    V_inst: object
    A_sf: object  # coefficient on dtheta_e
    A_inst: object  # a with A_inst = a d(arg c)
    sigma: object


def kappa0(R):
    """Constant that aligns the lattice normalization with V_sf + V_inst."""
    return np.log(0.5 * R) + EULER_GAMMA


def _unpack(p, theta_e=None, chart="principal"):
    if isinstance(p, OVPoint):
        return np.asarray(p.c, dtype=complex), np.asarray(p.theta_e, dtype=float), p.chart
    return np.asarray(p, dtype=complex), np.asarray(theta_e, dtype=float), chart


def _n_terms(x_min, max_terms, cutoff):
    n = int(np.ceil(cutoff / x_min)) if x_min > 0 else max_terms + 1
    if n > max_terms:
        raise NumericalFailure(
            f"Bessel series needs {n} terms at 2piR|c| = {x_min:.3g}; max_terms is {max_terms}"
        )
    return max(_MIN_TERMS, n)


def bessel_series(rc, theta, R, max_terms: int = 100000, tol: float = _SERIES_TOL):
    """sum_{n>0} of cos(n th) K0, sin(n th) K0 / n and sin(n th) K1, argument 2piRn|c|.

    Returns the three sums. Terms are dropped once the argument exceeds
    -ln(tol), where K0 and K1 fall below tol; NumericalFailure is raised when
    that would take more than ``max_terms`` terms.
    """
    rc, theta = np.broadcast_arrays(np.asarray(rc, float), np.asarray(theta, float))
    if np.any(rc <= 0):
        raise DomainError("Bessel series need c != 0")
    cutoff = max(-np.log(tol), 5.0)
    x = TWO_PI * R * rc
    N = _n_terms(float(np.min(x)), max_terms, cutoff)
    cos_k0 = np.zeros_like(x)
    sin_k0 = np.zeros_like(x)
    sin_k1 = np.zeros_like(x)
    for n in range(1, N + 1):
        xn = n * x
        live = xn < cutoff
        if not np.any(live):
            break
        k0, k1 = bessel_k0k1(np.where(live, xn, 1.0))
        k0 = np.where(live, k0, 0.0)
        k1 = np.where(live, k1, 0.0)
        cos_k0 += np.cos(n * theta) * k0
        s = np.sin(n * theta)
        sin_k0 += s * k0 / n
        sin_k1 += s * k1
    return cos_k0, sin_k0, sin_k1


def _series(c, theta_e, params: ModelParams):
    return bessel_series(np.abs(c), theta_e, params.R, params.max_terms, params.series_tol)


def potential_lattice(c, theta_e, S: HarmonicInvariant, params: ModelParams):
    """V from the regularized lattice sum; defined at c = 0 away from theta_e in 2piZ."""
    c = np.asarray(c, dtype=complex)
    theta_e = np.asarray(theta_e, dtype=float)
    R = params.R
    s1 = invariant_eval(S, c).S1
    total = regularized_theta_sum(R * np.abs(c), theta_e / TWO_PI)
    return R / (4 * np.pi) * (total + 2.0 * s1 + 2.0 * kappa0(R))


def potential_semiflat(c, S, params):
    c = np.asarray(c, dtype=complex)
    if np.any(c == 0):
        raise DomainError("V_sf is singular at c = 0")
    return params.R / TWO_PI * (invariant_eval(S, c).S1 - np.log(np.abs(c)))


def potential_instanton(c, theta_e, params):
    cos_k0, _, _ = _series(c, theta_e, params)
    return params.R / np.pi * cos_k0


def sigma_correction(p, params: ModelParams, theta_e=None, chart="principal"):
    """sigma = (1/piR) sum_{n>0} sin(n theta_e) K0(2piRn|c|) / n, so d sigma/d theta_e = V_inst/R^2."""
    c, th, _ = _unpack(p, theta_e, chart)
    if np.any(c == 0):
        raise DomainError("sigma is undefined at c = 0")
    _, sin_k0, _ = _series(c, th, params)
    out = sin_k0 / (np.pi * params.R)
    return out if out.ndim else float(out)


def ov_potential(p, S: HarmonicInvariant, params: ModelParams, theta_e=None, chart="principal") -> OoguriVafaField:
    """V from the lattice sum, and its semi-flat / instanton split from the Bessel side."""
    c, th, chart = _unpack(p, theta_e, chart)
    tau = th / TWO_PI
    if np.any((c == 0) & (tau == np.round(tau))):
        raise SingularityError("(c, theta_e) = (0, 0) is the singular point")
    V = potential_lattice(c, th, S, params)
    if np.any(c == 0):
        nan = np.full(np.broadcast(c, th).shape, np.nan)
        return OoguriVafaField(V, nan, nan, nan, nan, nan)
    inv = invariant_eval(S, c)
    R = params.R
    cos_k0, sin_k0, sin_k1 = _series(c, th, params)
    V_sf = R / TWO_PI * (inv.S1 - np.log(np.abs(c)))
    V_inst = R / np.pi * cos_k0
    mu = inv.S2 + branch_arg(c, chart)
    A_sf = -mu / (4 * np.pi**2) + 0.0 * th
    A_inst = R / np.pi * np.abs(c) * sin_k1
    sigma = sin_k0 / (np.pi * R)
    return OoguriVafaField(V, V_sf, V_inst, A_sf, A_inst, sigma)


def ov_connection(p, S, params, theta_e=None, chart="principal", part: str = "full") -> FormAtPoint:
    """A_0 = A_sf + A_inst as a real 1-form in (c1, c2, theta_e, theta_m).

    ``part`` selects ``"full"``, ``"sf"`` or ``"inst"``.
    """
    c, th, chart = _unpack(p, theta_e, chart)
    if np.any(c == 0):
        raise DomainError("the connection is singular at c = 0")
    c, th = np.broadcast_arrays(c, th)
    inv = invariant_eval(S, c)
    mu = inv.S2 + branch_arg(c, chart)
    r2 = np.abs(c) ** 2
    a_sf = -mu / (4 * np.pi**2)
    _, _, sin_k1 = _series(c, th, params)
    a = params.R / np.pi * np.abs(c) * sin_k1
    zero = np.zeros(c.shape)
    inst = np.stack([-a * c.imag / r2, a * c.real / r2, zero, zero], axis=-1)
    sf = np.stack([zero, zero, a_sf, zero], axis=-1)
    coeffs = {"full": inst + sf, "sf": sf, "inst": inst}[part]
    return FormAtPoint(1, FRAME_OV, coeffs)


def potential(c, theta_e, S, params, part="full"):
    """V, V_sf or V_inst (``part``) as a plain array; the full V uses the lattice sum."""
    if part == "full":
        return potential_lattice(c, theta_e, S, params)
    if part == "sf":
        return potential_semiflat(c, S, params) + 0.0 * np.asarray(theta_e)
    if part == "inst":
        return potential_instanton(c, theta_e, params)
    raise ValueError(f"unknown part {part!r}")


def omega0(c, theta_e, S, params, chart="principal", part="full") -> FormAtPoint:
    """omega_0 = -2pi [dc2 ^ (dtheta_m/2pi + A_0) + V_0 dtheta_e/(2piR) ^ dc1]."""
    c = np.asarray(c, dtype=complex)
    th = np.asarray(theta_e, dtype=float)
    c, th = np.broadcast_arrays(c, th)
    V = potential(c, th, S, params, part)
    A = ov_connection(c, S, params, th, chart, part)
    one = np.ones(c.shape)
    zero = np.zeros(c.shape)
    dc1 = FormAtPoint(1, FRAME_OV, np.stack([one, zero, zero, zero], -1))
    dc2 = FormAtPoint(1, FRAME_OV, np.stack([zero, one, zero, zero], -1))
    dth_e = FormAtPoint(1, FRAME_OV, np.stack([zero, zero, one, zero], -1))
    dth_m = FormAtPoint(1, FRAME_OV, np.stack([zero, zero, zero, one], -1))
    theta = dth_m.scale(1.0 / TWO_PI) + A
    return ((dc2 ^ theta) + (dth_e ^ dc1).scale(V / (TWO_PI * params.R))).scale(-TWO_PI)


def ov_action_angle(p, S, params, theta_e=None, theta_m=None, chart="principal") -> ActionAngle:
    """(z_m, z_e, corrected theta_e, corrected theta_m) on the Ooguri-Vafa space."""
    if isinstance(p, OVPoint):
        c, th, chart = _unpack(p)
        tm = np.asarray(p.theta_m, dtype=float)
    else:
        c = np.asarray(p, dtype=complex)
        th = np.asarray(theta_e, dtype=float)
        tm = np.asarray(theta_m, dtype=float)
    if np.any(c == 0):
        raise DomainError("action-angle coordinates need c != 0")
    inv = invariant_eval(S, c)
    lam = inv.S1 - np.log(np.abs(c))
    if np.any(lam <= 0):
        raise DegenerateLatticeError("S1 - ln|c| <= 0")
    arg = branch_arg(c, chart)
    mu = inv.S2 + arg
    sigma = sigma_correction(c, params, th, chart)
    R = params.R
    # Re(c - c ln c) = c1 - c1 ln|c| + c2 arg c
    z_m = (c.real - c.real * np.log(np.abs(c)) + c.imag * arg + inv.S) / TWO_PI
    te = th + TWO_PI * R * sigma / lam
    tmm = -tm - mu * R * sigma / lam
    z_e = np.broadcast_to(c.imag, np.shape(te)) * 1.0
    return ActionAngle(np.broadcast_to(z_m, np.shape(te)) * 1.0, z_e, te, tmm)


def gibbons_hawking_metric(p, S, params, theta_e=None, chart="principal", part="full") -> MetricAtPoint:
    """g = V (dc1^2 + dc2^2 + (dtheta_e/2piR)^2) + V^-1 (dtheta_m/2pi + A_0)^2.

    Positivity of V is checked first, so the error for a non-positive
    potential is raised even on the theta_e-axis where A_0 is undefined.
    """
    c, th, chart = _unpack(p, theta_e, chart)
    c, th = np.broadcast_arrays(c, th)
    if part == "full":
        V = potential_lattice(c, th, S, params)
    else:
        V = potential(c, th, S, params, part)
    if np.any(~(V > 0)):
        raise PositivityError(f"potential is not positive (min V = {np.min(V):.6g})")
    if np.any(c == 0):
        raise DomainError("the metric needs c != 0 (the connection is singular on the axis)")
    R = params.R
    A = ov_connection(c, S, params, th, chart, "sf" if part == "sf" else "full").coeffs
    theta = A + np.array([0.0, 0.0, 0.0, 1.0 / TWO_PI])
    base = np.zeros(c.shape + (4, 4))
    base[..., 0, 0] = 1.0
    base[..., 1, 1] = 1.0
    base[..., 2, 2] = 1.0 / (TWO_PI * R) ** 2
    g = V[..., None, None] * base + np.einsum("...i,...j->...ij", theta, theta) / V[..., None, None]
    return MetricAtPoint(FRAME_OV, g)


# ---------------------------------------------------------------------------
# positivity on the theta_e-axis


def _half_axis_sum(theta):
    return 0.5 * regularized_theta_sum(0.0, np.asarray(theta) / TWO_PI)


def axis_minimum(theta_grid=None):
    """min over theta_e of (1/2) sum_n [1/|theta_e/2pi + n| - kappa(n)], and its location.

    The grid minimum is polished with a bounded scalar minimization.
    """
    if theta_grid is None:
        theta_grid = np.linspace(0.0, TWO_PI, 401)[1:-1]
    theta_grid = np.asarray(theta_grid, dtype=float)
    theta_grid = theta_grid[np.mod(theta_grid, TWO_PI) != 0]
    vals = _half_axis_sum(theta_grid)
    k = int(np.argmin(vals))
    lo = theta_grid[max(k - 1, 0)]
    hi = theta_grid[min(k + 1, len(theta_grid) - 1)]
    best_t, best_v = float(theta_grid[k]), float(vals[k])
    if hi > lo:
        res = minimize_scalar(lambda t: float(_half_axis_sum(t)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-10})
        if res.fun < best_v:
            best_t, best_v = float(res.x), float(res.fun)
    return best_v, best_t


def positivity_margin(S: HarmonicInvariant, params: ModelParams | None = None, theta_grid=None) -> float:
    """S1(0) + min over theta_e of half the regularized axis sum; positive means the condition holds."""
    s1_0 = invariant_eval(S, 0j).S1
    return float(s1_0 + axis_minimum(theta_grid)[0])


def potential_axis_margin(S, params: ModelParams, theta_grid=None) -> float:
    """The same margin including kappa0(R); its sign is the sign of min V on the axis."""
    return positivity_margin(S, params, theta_grid) + float(kappa0(params.R))


# ---------------------------------------------------------------------------
# semi-flat embedding check


def embedding_pullback(c, t, S, params, chart="principal") -> FormAtPoint:
    """Semi-flat omega_0 pulled back to (c1, c2, t1, t2) through
    theta_e = 2pi t1/lam and theta_m = -(t2 - mu t1/lam)."""
    from .geometry import FRAME_CT, change_frame

    c = np.asarray(c, dtype=complex)
    t1, t2 = (np.asarray(v, dtype=float) for v in t)
    c, t1, t2 = np.broadcast_arrays(c, t1, t2)
    inv = invariant_eval(S, c)
    lam = inv.S1 - np.log(np.abs(c))
    mu = inv.S2 + branch_arg(c, chart)
    r2 = np.abs(c) ** 2
    m = inv.S11 - c.real / r2
    n = inv.S12 - c.imag / r2
    theta_e = TWO_PI * t1 / lam
    K = np.zeros(c.shape + (4, 4))
    K[..., 0, 0] = 1.0
    K[..., 1, 1] = 1.0
    K[..., 2, 0] = -TWO_PI * t1 * m / lam**2
    K[..., 2, 1] = -TWO_PI * t1 * n / lam**2
    K[..., 2, 2] = TWO_PI / lam
    # theta_m = -t2 + mu t1 / lam
    K[..., 3, 0] = t1 * (n * lam - mu * m) / lam**2
    K[..., 3, 1] = t1 * (-m * lam - mu * n) / lam**2
    K[..., 3, 2] = mu / lam
    K[..., 3, 3] = -1.0
    w = omega0(c, theta_e, S, params, chart, part="sf")
    return change_frame(w, K, FRAME_CT)


# ---------------------------------------------------------------------------
# pointwise identity checks


def poisson_residual(c, theta_e, S, params) -> float:
    """max |V_lattice - (V_sf + V_inst)| / |V_lattice|; the two sides share no code."""
    V = potential_lattice(c, theta_e, S, params)
    split = potential_semiflat(c, S, params) + potential_instanton(c, theta_e, params)
    return float(np.max(np.abs(V - split) / np.abs(V)))


def monopole_residual(c, theta_e, S, params, h: float = 1e-4) -> float:
    """max over components of dA_0 - *dV_0 in flat coordinates (c1, c2, y), y = theta_e/(2piR)."""
    from .geometry import fd_partials

    c = np.asarray(c, dtype=complex)
    x = np.stack(np.broadcast_arrays(c.real, c.imag, np.asarray(theta_e, dtype=float)), axis=-1)

    def a_fun(p):
        return ov_connection(p[..., 0] + 1j * p[..., 1], S, params, p[..., 2]).coeffs[..., :3]

    def v_fun(p):
        return potential_lattice(p[..., 0] + 1j * p[..., 1], p[..., 2], S, params)

    dA = fd_partials(a_fun, x, h, 4)  # dA[j, ..., k] = d_j A_k
    dV = fd_partials(v_fun, x, h, 4)
    s = TWO_PI * params.R  # d/dy = s d/dtheta_e and A_y = s A_theta
    f12 = dA[0][..., 1] - dA[1][..., 0]
    f1y = s * (dA[0][..., 2] - dA[2][..., 0])
    f2y = s * (dA[1][..., 2] - dA[2][..., 1])
    res = np.stack([f12 - s * dV[2], f1y + dV[1], f2y - dV[0]])
    return float(np.max(np.abs(res)))


def omega0_residual(c, theta_e, theta_m, S, params, h: float = 1e-4, chart="principal") -> float:
    """max coefficient gap between omega_0 from (V_0, A_0) and dz_m^dtheta~_e + dz_e^dtheta~_m,
    the latter built from finite-difference Jacobians of the corrected coordinates."""
    from .geometry import fd_partials

    c = np.asarray(c, dtype=complex)
    x = np.stack(np.broadcast_arrays(c.real, c.imag, np.asarray(theta_e, float), np.asarray(theta_m, float)), -1)

    def coords(p):
        return ov_action_angle(p[..., 0] + 1j * p[..., 1], S, params, p[..., 2], p[..., 3], chart).as_array()

    J = fd_partials(coords, x, h, 4)

    def one(k):
        return FormAtPoint(1, FRAME_OV, np.moveaxis(J[..., k], 0, -1))

    rhs = (one(0) ^ one(2)) + (one(1) ^ one(3))
    lhs = omega0(x[..., 0] + 1j * x[..., 1], x[..., 2], S, params, chart)
    return float(np.max(np.abs(lhs.coeffs - rhs.coeffs)))
