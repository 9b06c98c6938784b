"""The focus-focus local model on C^2: fibration c = z1 z2, the two commuting
Hamiltonian flows, the gluing map built from the semi-global invariant S, the
parametrization T(c; t) and the action-angle coordinates.

Functions broadcast over arrays. A base point may be passed either as a
:class:`BasePoint` (which carries its chart) or as a complex array together
with an explicit ``chart`` argument.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLatticeError, DomainError
from .geometry import FRAME_CT, FormAtPoint, fd_partials
from .scalar_kernels import (
    BasePoint,
    HarmonicInvariant,
    ModelParams,
    branch_arg,
    invariant_eval,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FiberPoint:
    """Flow times (t1, t2) measured from the section c -> (c, 1)."""

    t1: object
    t2: object


@dataclass(frozen=True)
class PeriodLattice:
    gen1: tuple  # (S1 - ln|c|, S2 + arg c)
    gen2: tuple  # (0, 2 pi)


@dataclass(frozen=True)
class ActionAngle:
    z_m: object
    z_e: object
    theta_e: object
    theta_m: object

    def as_array(self):
        return np.stack(np.broadcast_arrays(self.z_m, self.z_e, self.theta_e, self.theta_m), axis=-1)


def _unpack_c(c, chart):
    if isinstance(c, BasePoint):
        return np.asarray(c.c, dtype=complex), c.chart
    return np.asarray(c, dtype=complex), chart


def _unpack_t(t):
    if isinstance(t, FiberPoint):
        return np.asarray(t.t1, dtype=float), np.asarray(t.t2, dtype=float)
    t1, t2 = t
    return np.asarray(t1, dtype=float), np.asarray(t2, dtype=float)


def _check_regular(c, params: ModelParams | None):
    r = np.abs(c)
    if np.any(r == 0):
        raise DomainError("c = 0 is the singular fiber; no section there")
    if params is not None and np.any(r >= params.epsilon):
        raise DomainError(f"|c| must be below epsilon = {params.epsilon}")


# ---------------------------------------------------------------------------
# maps on C^2


def fibration(z1, z2):
    """c = z1 z2."""
    return np.asarray(z1, dtype=complex) * np.asarray(z2, dtype=complex)


def flow(z1, z2, t1, t2):
    """Joint time-(t1, t2) flow of the two Hamiltonians Re c and Im c."""
    phase = np.exp(np.asarray(t1) - 1j * np.asarray(t2))
    return phase * np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex) / phase


def gluing_factor(c, S: HarmonicInvariant):
    """exp(S1 - i S2) = exp(f'(c))."""
    return np.exp(S.holomorphic(c, 1))


def glue_map(z1, z2, S: HarmonicInvariant, params: ModelParams | None = None):
    """(z1, z2) -> (e^{S1 - i S2} / z2, e^{-S1 + i S2} z1 z2^2)."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    if np.any(z2 == 0):
        raise DomainError("glue_map needs z2 != 0")
    c = z1 * z2
    if params is not None and np.any(np.abs(c) >= params.epsilon):
        raise DomainError(f"|z1 z2| must be below epsilon = {params.epsilon}")
    g = gluing_factor(c, S)
    return g / z2, z1 * z2 * z2 / g


def parametrize(c, t, params: ModelParams | None = None):
    """T(c; t1, t2) = (c e^{-t1 + i t2}, e^{t1 - i t2})."""
    c, _ = _unpack_c(c, "principal")
    _check_regular(c, params)
    t1, t2 = _unpack_t(t)
    e = np.exp(t1 - 1j * t2)
    return c / e, e


def parametrize_differentials(c, t):
    """dz1 and dz2 of T as complex 1-forms in the (c1, c2, t1, t2) frame.

    Exact chain rule: dz1 = e^{-t1+it2}(dc + c(-dt1 + i dt2)), dz2 = z2 (dt1 - i dt2).
    """
    c, _ = _unpack_c(c, "principal")
    t1, t2 = _unpack_t(t)
    c, t1, t2 = np.broadcast_arrays(c, t1, t2)
    e = np.exp(t1 - 1j * t2)
    one = np.ones_like(c)
    dz1 = np.stack([one / e, 1j * one / e, -c / e, 1j * c / e], axis=-1)
    dz2 = np.stack([0 * one, 0 * one, e, -1j * e], axis=-1)
    return FormAtPoint(1, FRAME_CT, dz1), FormAtPoint(1, FRAME_CT, dz2)


# ---------------------------------------------------------------------------
# lattice and action-angle coordinates


def _lambda_mu(c, S, chart, winding=0):
    inv = invariant_eval(S, c)
    arg = branch_arg(c, chart) + TWO_PI * winding
    lam = inv.S1 - np.log(np.abs(c))
    mu = inv.S2 + arg
    return lam, mu, arg, inv


def period_lattice(c, S: HarmonicInvariant, chart: str = "principal") -> PeriodLattice:
    c, chart = _unpack_c(c, chart)
    _check_regular(c, None)
    lam, mu, _, _ = _lambda_mu(c, S, chart)
    return PeriodLattice((lam, mu), (0.0, TWO_PI))


def action_angle(
    c,
    t,
    S: HarmonicInvariant,
    params: ModelParams | None = None,
    chart: str = "principal",
    winding: int = 0,
) -> ActionAngle:
    """Action-angle coordinates (z_m, z_e, theta_e, theta_m) of the point T(c; t).

    ``winding`` adds 2 pi * winding to arg c, i.e. evaluates the same formulas
    after continuing around the singular fiber.
    """
    c, chart = _unpack_c(c, chart)
    _check_regular(c, params)
    t1, t2 = _unpack_t(t)
    lam, mu, arg, inv = _lambda_mu(c, S, chart, winding)
    if np.any(lam <= 0):
        raise DegenerateLatticeError("S1 - ln|c| <= 0: the period lattice degenerates")
    c1, c2 = c.real, c.imag
    z_m = (-np.log(np.abs(c)) * c1 + arg * c2 + c1 + inv.S) / TWO_PI
    theta_e = TWO_PI * t1 / lam
    theta_m = t2 - t1 * mu / lam
    return ActionAngle(z_m, np.broadcast_to(c2, np.shape(z_m)) * 1.0, theta_e, theta_m)


def angle_frame_jacobian(c, theta_e, S, chart="principal"):
    """d(c1, c2, t1, t2) / d(c1, c2, theta_m, theta_e) at fixed angles.

    Inverts the angle formulas: t1 = lam theta_e / 2pi and
    t2 = theta_m + mu theta_e / 2pi, with grad lam = (m, n), grad mu = (n, -m).
    """
    c, chart = _unpack_c(c, chart)
    theta_e = np.asarray(theta_e, dtype=float)
    c, theta_e = np.broadcast_arrays(c, theta_e)
    lam, mu, _, inv = _lambda_mu(c, S, chart)
    r2 = np.abs(c) ** 2
    m = inv.S11 - c.real / r2
    n = inv.S12 - c.imag / r2
    K = np.zeros(c.shape + (4, 4))
    K[..., 0, 0] = 1.0
    K[..., 1, 1] = 1.0
    s = theta_e / TWO_PI
    K[..., 2, 0] = m * s
    K[..., 2, 1] = n * s
    K[..., 2, 3] = lam / TWO_PI
    K[..., 3, 0] = n * s
    K[..., 3, 1] = -m * s
    K[..., 3, 2] = 1.0
    K[..., 3, 3] = mu / TWO_PI
    return K


def fiber_times(c, theta_m, theta_e, S, chart="principal"):
    """(t1, t2) of the point with angles (theta_m, theta_e) over c."""
    c, chart = _unpack_c(c, chart)
    lam, mu, _, _ = _lambda_mu(c, S, chart)
    theta_e = np.asarray(theta_e, dtype=float)
    return lam * theta_e / TWO_PI, np.asarray(theta_m) + mu * theta_e / TWO_PI


def pulled_back_canonical_form(c, t) -> FormAtPoint:
    """T^*(Re dz1 ^ dz2) in the (c1, c2, t1, t2) frame."""
    dz1, dz2 = parametrize_differentials(c, t)
    return (dz1 ^ dz2).real


def action_angle_form(c, t, S, params=None, chart="principal", order=6, rel_step=1e-2):
    """dz_m ^ dtheta_e + dz_e ^ dtheta_m from a finite-difference Jacobian.

    Steps are relative: ``rel_step * |c|`` in the base directions and
    ``rel_step`` in the fiber directions.
    """
    c, chart = _unpack_c(c, chart)
    t1, t2 = _unpack_t(t)
    c, t1, t2 = np.broadcast_arrays(c, t1, t2)
    x = np.stack([c.real, c.imag, t1, t2], axis=-1)

    def coords(p):
        cc = p[..., 0] + 1j * p[..., 1]
        return action_angle(cc, (p[..., 2], p[..., 3]), S, params, chart).as_array()

    steps = np.stack(
        [rel_step * np.abs(c), rel_step * np.abs(c), np.full(c.shape, rel_step), np.full(c.shape, rel_step)],
        axis=-1,
    )
    jac = fd_partials(coords, x, steps, order)
    # jac[j, ..., k] = d(coord_k) / d(x_j)
    d = {name: FormAtPoint(1, FRAME_CT, np.moveaxis(jac[..., k], 0, -1))
         for k, name in enumerate(("z_m", "z_e", "theta_e", "theta_m"))}
    return (d["z_m"] ^ d["theta_e"]) + (d["z_e"] ^ d["theta_m"])


def verify_symplectic_identity(c, t, S, params=None, chart="principal", order=6, rel_step=1e-2):
    """Max coefficient discrepancy between T^*(omega_can) and the action-angle form."""
    lhs = pulled_back_canonical_form(c, t)
    rhs = action_angle_form(c, t, S, params, chart, order, rel_step)
    return float(np.max(np.abs(lhs.coeffs - rhs.coeffs)))


# ---------------------------------------------------------------------------
# harmonicity gate for the gluing map


class ScalarField:
    """A smooth real function S(c1, c2) given as a black box.

    Used to probe the gluing construction with invariants that are not
    harmonic; everything metric-level requires :class:`HarmonicInvariant`.
    """

    def __init__(self, func: Callable, step: float = 1e-3):
        self.func = func
        self.step = step

    @classmethod
    def from_invariant(cls, S: HarmonicInvariant, step: float = 1e-3):
        return cls(lambda c1, c2: np.real(S.holomorphic(c1 + 1j * c2, 0)), step)

    def __call__(self, c1, c2):
        return self.func(c1, c2)

    def gradient(self, c):
        """(S1, S2) at complex c by 4th-order central differences."""
        c = np.asarray(c, dtype=complex)
        x = np.stack([c.real, c.imag], axis=-1)
        g = fd_partials(lambda p: self.func(p[..., 0], p[..., 1]), x, self.step, order=4)
        return g[0], g[1]

    def gluing_factor(self, c):
        s1, s2 = self.gradient(c)
        return np.exp(s1 - 1j * s2)


def gluing_cauchy_riemann_residual(S, z1, z2, h: float = 1e-3) -> float:
    """max |d/d zbar_k exp(S1 - i S2)(z1 z2)| over the sample points and k = 1, 2.

    Vanishes exactly when the gluing map is holomorphic, i.e. when S is
    harmonic; ``S`` may be a HarmonicInvariant or a black-box ScalarField and
    both go through the same finite-difference route.
    """
    field = S if isinstance(S, ScalarField) else ScalarField.from_invariant(S)
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    z1, z2 = np.broadcast_arrays(z1, z2)
    x = np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)

    def factor(p):
        g = field.gluing_factor((p[..., 0] + 1j * p[..., 1]) * (p[..., 2] + 1j * p[..., 3]))
        return np.stack([g.real, g.imag], axis=-1)

    d = fd_partials(factor, x, h, order=4)
    dg = d[..., 0] + 1j * d[..., 1]
    dbar1 = 0.5 * (dg[0] + 1j * dg[1])
    dbar2 = 0.5 * (dg[2] + 1j * dg[3])
    return float(max(np.max(np.abs(dbar1)), np.max(np.abs(dbar2))))
