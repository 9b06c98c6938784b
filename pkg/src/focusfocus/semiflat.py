"""The semi-flat Kähler form of the local model and its metric.

omega_sf = pi R Re(dZ_m ^ dconj(Z_e)) + (1/2piR) dtheta_m ^ dtheta_e, written
in the (c1, c2, t1, t2) frame. With lam = S1 - ln|c|, m = S11 - c1/|c|^2 and
n = S12 - c2/|c|^2 its six coefficients are

    dc1^dc2 : R lam + t1^2 (m^2 + n^2) / (R lam^3)
    dc1^dt1 : -t1 n / (R lam^2)        dc1^dt2 : t1 m / (R lam^2)
    dc2^dt1 :  t1 m / (R lam^2)        dc2^dt2 : t1 n / (R lam^2)
    dt1^dt2 : -1 / (R lam)
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLatticeError, NumericalFailure
from .geometry import FRAME_CT, FormAtPoint, MetricAtPoint, fd_partials, leading_minors
from .holomorphic import central_charges, holomorphic_form
from .local_model import _lambda_mu, _unpack_c, _unpack_t, action_angle
from .scalar_kernels import HarmonicInvariant, ModelParams

TWO_PI = 2.0 * np.pi

# J acting on tangent vectors in the (c1, c2, t1, t2) frame:
# d/dc1 -> d/dc2, d/dc2 -> -d/dc1, d/dt1 -> -d/dt2, d/dt2 -> d/dt1
J_AU = np.array(
    [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


@dataclass(frozen=True)
class SemiflatCoefficients:
    lam: object
    m: object
    n: object
    form: FormAtPoint


def _resolve_R(R, c):
    if callable(R):
        return np.asarray(R(c), dtype=float)
    return R


def semiflat_coefficients(c, t, S: HarmonicInvariant, params: ModelParams,
                          chart: str = "principal", R_field: Callable | None = None):
    """Closed-form coefficients of omega_sf.

    ``R_field`` optionally replaces the constant R by a positive function of c;
    the resulting form is no longer closed and is excluded from Kähler checks.
    """
    c, chart = _unpack_c(c, chart)
    t1, t2 = _unpack_t(t)
    c, t1, t2 = np.broadcast_arrays(c, t1, t2)
    lam, _, _, inv = _lambda_mu(c, S, chart)
    if np.any(np.abs(lam) < 1e-300):
        raise DegenerateLatticeError("S1 - ln|c| = 0: omega_sf is undefined")
    R = params.R if R_field is None else _resolve_R(R_field, c)
    r2 = np.abs(c) ** 2
    m = inv.S11 - c.real / r2
    n = inv.S12 - c.imag / r2
    a = t1 / (R * lam * lam)
    coeffs = np.stack(
        [
            R * lam + t1 * t1 * (m * m + n * n) / (R * lam**3),
            -a * n,
            a * m,
            a * m,
            a * n,
            -1.0 / (R * lam) + 0.0 * t1,
        ],
        axis=-1,
    )
    return SemiflatCoefficients(lam, m, n, FormAtPoint(2, FRAME_CT, coeffs))


def semiflat_form(c, t, S, params, chart="principal", R_field=None) -> FormAtPoint:
    return semiflat_coefficients(c, t, S, params, chart, R_field).form


def _base_steps(c, S, chart, rel_step):
    """Stencil steps: lam varies on the scale lam |c| in the base, so the base
    step shrinks with lam; the fiber step is rel_step."""
    lam = _lambda_mu(c, S, chart)[0]
    hb = rel_step * np.abs(c) * np.minimum(1.0, np.abs(lam))
    return np.stack([hb, hb, np.full(hb.shape, rel_step), np.full(hb.shape, rel_step)], axis=-1)


def semiflat_form_from_definition(c, t, S, params, chart="principal", order=6, rel_step=1e-2):
    """omega_sf assembled from finite-difference differentials of Z_m, Z_e, theta_m, theta_e."""
    c, chart = _unpack_c(c, chart)
    t1, t2 = _unpack_t(t)
    c, t1, t2 = np.broadcast_arrays(c, t1, t2)
    x = np.stack([c.real, c.imag, t1, t2], axis=-1)

    def fields(p):
        cc = p[..., 0] + 1j * p[..., 1]
        z = central_charges(cc, S, None, chart)
        aa = action_angle(cc, (p[..., 2], p[..., 3]), S, None, chart)
        return np.stack(
            [z.Z_m.real, z.Z_m.imag, z.Z_e.real, z.Z_e.imag, aa.theta_m, aa.theta_e], axis=-1
        )

    steps = _base_steps(c, S, chart, rel_step)
    jac = np.moveaxis(fd_partials(fields, x, steps, order), 0, -2)  # (..., 4 dirs, 6 fields)
    one = lambda k: FormAtPoint(1, FRAME_CT, jac[..., :, k])
    dZm = one(0) + one(1).scale(1j)
    dZe_bar = one(2) - one(3).scale(1j)
    R = params.R
    return (dZm ^ dZe_bar).real.scale(np.pi * R) + (one(4) ^ one(5)).scale(1.0 / (TWO_PI * R))


def semiflat_metric_matrix(c, t, S, params, chart="principal", R_field=None) -> MetricAtPoint:
    """g(X, Y) = omega_sf(X, J Y) in the (c1, c2, t1, t2) frame."""
    W = semiflat_form(c, t, S, params, chart, R_field).matrix()
    G = W @ J_AU
    asym = np.max(np.abs(G - np.swapaxes(G, -1, -2)))
    if asym > 1e-10 * max(1.0, float(np.max(np.abs(G)))):
        raise NumericalFailure(f"semi-flat metric is not symmetric ({asym:.3e})")
    return MetricAtPoint(FRAME_CT, G)


def semiflat_positive(c, t, S, params, chart="principal"):
    """Sylvester test of the semi-flat metric at each point of a batch."""
    g = semiflat_metric_matrix(c, t, S, params, chart).g
    minors = leading_minors(g)
    return np.all(minors > 0, axis=-1), minors


@dataclass(frozen=True)
class WedgeIdentityResiduals:
    square: np.ndarray  # omega ^ omega - (1/2) Omega ^ conj(Omega)
    with_omega: np.ndarray  # omega ^ Omega
    with_omega_bar: np.ndarray  # omega ^ conj(Omega)

    def max(self) -> float:
        return float(max(np.max(np.abs(self.square)), np.max(np.abs(self.with_omega)),
                         np.max(np.abs(self.with_omega_bar))))


def verify_wedge_identities(c, t, S, params, chart="principal", form: FormAtPoint | None = None):
    """The three 4-form identities tying omega_sf to Omega, as top coefficients."""
    w = semiflat_form(c, t, S, params, chart) if form is None else form
    om = holomorphic_form(w.batch_shape)
    sq = (w ^ w).top() - 0.5 * (om ^ om.conj()).top()
    return WedgeIdentityResiduals(sq, (w ^ om).top(), (w ^ om.conj()).top())


# ---------------------------------------------------------------------------
# i d dbar decomposition of the fiber part


def decomposition_potential(c, t, S, params, chart="principal"):
    """phi = t1^2 / (R lam), whose i d dbar is (1/2piR) dtheta_m ^ dtheta_e."""
    c, chart = _unpack_c(c, chart)
    t1, _ = _unpack_t(t)
    lam, _, _, _ = _lambda_mu(c, S, chart)
    if np.any(np.abs(lam) < 1e-300):
        raise DegenerateLatticeError("S1 - ln|c| = 0")
    return t1 * t1 / (params.R * lam)


# d/du_j = D_j . grad in (c1, c2, t1, t2), with u1 = c1 + i c2, u2 = t1 - i t2
_D = np.array([[0.5, -0.5j, 0, 0], [0, 0, 0.5, 0.5j]])
_DU = np.array([[1, 1j, 0, 0], [0, 0, 1, -1j]])


def i_ddbar_fd(func, x, h=1e-3, order=4):
    """i d dbar of a real function of (c1, c2, t1, t2) by finite differences."""
    x = np.asarray(x, dtype=float)

    def grad(p):
        return np.moveaxis(fd_partials(func, p, h, order), 0, -1)

    hess = np.moveaxis(fd_partials(grad, x, h, order), 0, -2)  # (..., 4, 4)
    hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    H = np.einsum("ja,...ab,kb->...jk", _D, hess, np.conj(_D))
    out = None
    for j in range(2):
        for k in range(2):
            du = FormAtPoint(1, FRAME_CT, np.broadcast_to(_DU[j], x.shape))
            dub = FormAtPoint(1, FRAME_CT, np.broadcast_to(np.conj(_DU[k]), x.shape))
            term = (du ^ dub).scale(1j * H[..., j, k])
            out = term if out is None else out + term
    return out


def fiber_form(c, t, S, params, chart="principal") -> FormAtPoint:
    """(1/2piR) dtheta_m ^ dtheta_e in the (c1, c2, t1, t2) frame, in closed form."""
    co = semiflat_coefficients(c, t, S, params, chart)
    c, _ = _unpack_c(c, chart)
    t1, _ = _unpack_t(t)
    c, t1 = np.broadcast_arrays(c, t1)
    lam, mu, _, _ = _lambda_mu(c, S, chart)
    # theta_e = 2pi t1/lam, theta_m = t2 - mu t1/lam
    m, n = co.m, co.n
    dte = np.stack([-TWO_PI * t1 * m / lam**2, -TWO_PI * t1 * n / lam**2, TWO_PI / lam, 0 * lam], axis=-1)
    dtm = np.stack(
        [-t1 * (n * lam - mu * m) / lam**2, -t1 * (-m * lam - mu * n) / lam**2, -mu / lam, 1 + 0 * lam],
        axis=-1,
    )
    one = lambda a: FormAtPoint(1, FRAME_CT, a)
    return (one(dtm) ^ one(dte)).scale(1.0 / (TWO_PI * params.R))


def verify_decomposition(c, t, S, params, chart="principal", rel_step=1e-2):
    """Max coefficient gap between i d dbar phi (FD) and the closed-form fiber part."""
    c, chart = _unpack_c(c, chart)
    t1, t2 = _unpack_t(t)
    c, t1, t2 = np.broadcast_arrays(c, t1, t2)
    x = np.stack([c.real, c.imag, t1, t2], axis=-1)

    def phi(p):
        return decomposition_potential(p[..., 0] + 1j * p[..., 1], (p[..., 2], p[..., 3]), S, params, chart)

    h = _base_steps(c, S, chart, rel_step)
    lhs = i_ddbar_fd(phi, x, h, order=6)
    rhs = fiber_form(c, (t1, t2), S, params, chart)
    return float(np.max(np.abs(lhs.coeffs - rhs.coeffs)))
