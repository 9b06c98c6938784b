"""Central charges and the holomorphic symplectic form of the local model,
with pointwise checks of closedness, isotropy and positivity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .geometry import (
    FRAME_ACTION_ANGLE,
    FRAME_CT,
    FormAtPoint,
    change_frame,
    exterior_derivative_fd,
    fd_laplacian,
    fd_partials,
)
from .local_model import _unpack_c, angle_frame_jacobian
from .scalar_kernels import HarmonicInvariant, ModelParams, branch_log, invariant_eval

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CentralCharge:
    Z_m: object
    Z_e: object


def central_charges(c, S: HarmonicInvariant, params: ModelParams | None = None,
                    chart: str = "principal") -> CentralCharge:
    """Z_m = (c - c ln c + S + i S~) / 2pi and Z_e = -i c on the declared branch."""
    c, chart = _unpack_c(c, chart)
    if np.any(c == 0):
        raise DomainError("central charges are singular at c = 0")
    if params is not None and np.any(np.abs(c) >= params.epsilon):
        raise DomainError(f"|c| must be below epsilon = {params.epsilon}")
    f = S.holomorphic(c, 0)
    z_m = (c - c * branch_log(c, chart) + f) / TWO_PI
    return CentralCharge(z_m, -1j * c)


def holomorphic_form(batch_shape=()) -> FormAtPoint:
    """Omega = (dc1 + i dc2) ^ (dt1 - i dt2) in the (c1, c2, t1, t2) frame."""
    dc = FormAtPoint(1, FRAME_CT, np.broadcast_to(np.array([1, 1j, 0, 0]), tuple(batch_shape) + (4,)))
    dt = FormAtPoint(1, FRAME_CT, np.broadcast_to(np.array([0, 0, 1, -1j]), tuple(batch_shape) + (4,)))
    return dc ^ dt


def canonical_form(batch_shape=()) -> FormAtPoint:
    """omega_can = dc1 ^ dt1 + dc2 ^ dt2 in the (c1, c2, t1, t2) frame."""
    return holomorphic_form(batch_shape).real


def holomorphic_form_angles(c, theta_e, S, chart="principal") -> FormAtPoint:
    """Omega pulled back to the (c1, c2, theta_m, theta_e) frame."""
    c, chart = _unpack_c(c, chart)
    K = angle_frame_jacobian(c, theta_e, S, chart)
    omega = holomorphic_form(K.shape[:-2])
    return change_frame(omega, K, FRAME_ACTION_ANGLE)


def volume_coefficient(c, S, chart="principal", frame: str = "angles"):
    """Top coefficient of Omega ^ conj(Omega), in the requested frame."""
    if frame == "ct":
        c = np.asarray(c, dtype=complex)
        om = holomorphic_form(c.shape)
        return (om ^ om.conj()).top()
    om = holomorphic_form_angles(c, 0.0, S, chart)
    return (om ^ om.conj()).top()


@dataclass
class CompatibilityReport:
    d_omega: float
    omega_wedge_omega: float
    positivity_margin: float
    laplacian_z_m: float
    laplacian_z_e: float
    holomorphy: float
    tol: float = 1e-8
    notes: list = field(default_factory=list)

    @property
    def positive(self) -> bool:
        return self.positivity_margin > 0

    @property
    def passed(self) -> bool:
        residuals = (self.d_omega, self.omega_wedge_omega, self.laplacian_z_m,
                     self.laplacian_z_e, self.holomorphy)
        return self.positive and all(r < self.tol for r in residuals)


def verify_compatibility(
    S: HarmonicInvariant,
    params: ModelParams,
    c_points,
    theta_e=(0.3, 2.0, 4.5),
    chart: str = "principal",
    tol: float = 1e-8,
    rel_step: float = 2e-2,
) -> CompatibilityReport:
    """Closedness, isotropy and positivity of Omega over a set of base points.

    dOmega is checked in the angle frame, where the coefficients depend on the
    point; the harmonicity of z_m and z_e is checked with a sixth-order
    finite-difference Laplacian.
    """
    c = np.asarray(c_points, dtype=complex).ravel()
    if np.any(c == 0):
        raise DomainError("grid must avoid c = 0")
    lam = invariant_eval(S, c).S1 - np.log(np.abs(c))
    margin = float(np.min(lam))
    notes = []
    if margin <= 0:
        notes.append("S1 - ln|c| <= 0 somewhere on the grid: Omega ^ conj(Omega) is not positive")

    # dOmega in the angle frame, at the points where the lattice is regular
    good = lam > 0
    cg = c[good]
    d_res = 0.0
    ww_res = 0.0
    if cg.size:
        th = np.asarray(theta_e, dtype=float)
        C, TH = np.meshgrid(cg, th, indexing="ij")
        x = np.stack([C.real, C.imag, np.zeros_like(TH), TH], axis=-1)

        def field(p):
            return holomorphic_form_angles(p[..., 0] + 1j * p[..., 1], p[..., 3], S, chart)

        h = np.stack([rel_step * np.abs(C)] * 2 + [np.full(C.shape, rel_step)] * 2, axis=-1)
        d_res = exterior_derivative_fd(field, x, h, order=6).max_abs()
        om = field(x)
        ww_res = (om ^ om).max_abs()

    xy = np.stack([c.real, c.imag], axis=-1)
    hc = rel_step * np.abs(c)[..., None]

    def zm(p):
        # Re Z_m equals z_m and, unlike action_angle, stays defined where the
        # lattice degenerates
        return central_charges(p[..., 0] + 1j * p[..., 1], S, None, chart).Z_m.real

    def ze(p):
        return p[..., 1]

    lap_m = float(np.max(np.abs(fd_laplacian(zm, xy, hc, order=6))))
    lap_e = float(np.max(np.abs(fd_laplacian(ze, xy, hc, order=6))))

    def charges(p):
        cc = central_charges(p[..., 0] + 1j * p[..., 1], S, None, chart)
        return np.stack([cc.Z_m.real, cc.Z_m.imag, cc.Z_e.real, cc.Z_e.imag], axis=-1)

    d = fd_partials(charges, xy, hc, order=6)
    dz = d[..., 0::2] + 1j * d[..., 1::2]
    dbar = 0.5 * (dz[0] + 1j * dz[1])
    holo = float(np.max(np.abs(dbar)))
    return CompatibilityReport(d_res, ww_res, margin, lap_m, lap_e, holo, tol, notes)
