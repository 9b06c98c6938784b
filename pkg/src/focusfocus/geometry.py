"""Pointwise exterior calculus on 4-dimensional coordinate frames.

Forms carry an optional leading batch shape so that a whole grid of points
can be processed with one numpy call. A degree-k form stores its C(4, k)
independent components in lexicographic order of the index tuples
(``itertools.combinations(range(4), k)``), which makes antisymmetry exact.
A 2-form is also available as an antisymmetric 4x4 matrix ``A`` with
``A[i, j]`` the coefficient of dx^i ^ dx^j for i < j.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    FrameMismatchError,
    NotHyperkahlerError,
    StencilError,
)

DIM = 4
_BASIS = {k: list(itertools.combinations(range(DIM), k)) for k in range(DIM + 1)}
_INDEX = {k: {idx: n for n, idx in enumerate(v)} for k, v in _BASIS.items()}


def _perm_sign(seq):
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _wedge_table(p, q):
    table = []
    for i, I in enumerate(_BASIS[p]):
        for j, J in enumerate(_BASIS[q]):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            table.append((i, j, _INDEX[p + q][K], _perm_sign(I + J)))
    return table


_WEDGE = {
    (p, q): _wedge_table(p, q)
    for p in range(DIM + 1)
    for q in range(DIM + 1 - p)
}


@dataclass(frozen=True)
class Frame:
    """Ordered coordinate labels; every coefficient array refers to this order."""

    names: tuple

    def __post_init__(self):
        names = tuple(self.names)
        if len(names) != DIM or len(set(names)) != DIM:
            raise ValueError(f"a frame needs {DIM} distinct labels, got {names}")
        object.__setattr__(self, "names", names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __str__(self):
        return "(" + ",".join(self.names) + ")"


FRAME_CT = Frame(("c1", "c2", "t1", "t2"))
FRAME_ACTION_ANGLE = Frame(("c1", "c2", "theta_m", "theta_e"))


@dataclass(frozen=True)
class FormAtPoint:
    """A differential form of fixed degree, possibly over a batch of points."""

    degree: int
    frame: Frame
    coeffs: np.ndarray

    def __post_init__(self):
        if not 0 <= self.degree <= DIM:
            raise ValueError("degree must lie in 0..4")
        coeffs = np.asarray(self.coeffs)
        if coeffs.shape[-1:] != (len(_BASIS[self.degree]),):
            raise ValueError(
                f"degree-{self.degree} form needs {len(_BASIS[self.degree])} components"
            )
        object.__setattr__(self, "coeffs", coeffs)

    # construction -------------------------------------------------------
    @classmethod
    def from_components(cls, degree, frame, components: dict, batch_shape=()):
        """Build from ``{(i, j, ...): value}`` with arbitrary index order."""
        out = np.zeros(tuple(batch_shape) + (len(_BASIS[degree]),), dtype=complex)
        for idx, val in components.items():
            if len(set(idx)) < len(idx):
                continue
            out[..., _INDEX[degree][tuple(sorted(idx))]] += _perm_sign(idx) * np.asarray(val)
        return cls(degree, frame, _maybe_real(out))

    @classmethod
    def one_form(cls, frame, coeffs):
        return cls(1, frame, np.asarray(coeffs))

    @classmethod
    def from_matrix(cls, frame, matrix):
        """2-form from an antisymmetric matrix (upper triangle is read)."""
        m = np.asarray(matrix)
        comps = np.stack([m[..., i, j] for i, j in _BASIS[2]], axis=-1)
        return cls(2, frame, comps)

    # views ---------------------------------------------------------------
    @property
    def batch_shape(self):
        return self.coeffs.shape[:-1]

    def matrix(self):
        if self.degree != 2:
            raise ValueError("matrix view exists for 2-forms only")
        m = np.zeros(self.batch_shape + (DIM, DIM), dtype=self.coeffs.dtype)
        for n, (i, j) in enumerate(_BASIS[2]):
            m[..., i, j] = self.coeffs[..., n]
            m[..., j, i] = -self.coeffs[..., n]
        return m

    def top(self):
        """Coefficient of dx^0 ^ dx^1 ^ dx^2 ^ dx^3 of a 4-form."""
        if self.degree != DIM:
            raise ValueError("top coefficient exists for 4-forms only")
        return self.coeffs[..., 0]

    def component(self, *idx):
        if len(set(idx)) < len(idx):
            return 0.0
        return _perm_sign(idx) * self.coeffs[..., _INDEX[self.degree][tuple(sorted(idx))]]

    def tensor(self):
        """Fully antisymmetric array of shape batch + (4,)*degree."""
        out = np.zeros(self.batch_shape + (DIM,) * self.degree, dtype=self.coeffs.dtype)
        for n, idx in enumerate(_BASIS[self.degree]):
            for perm in itertools.permutations(range(self.degree)):
                pidx = tuple(idx[p] for p in perm)
                out[(...,) + pidx] = _perm_sign(perm) * self.coeffs[..., n]
        return out

    @classmethod
    def from_tensor(cls, degree, frame, tensor):
        t = np.asarray(tensor)
        comps = np.stack([t[(...,) + idx] for idx in _BASIS[degree]], axis=-1)
        return cls(degree, frame, comps)

    # algebra ------------------------------------------------------------
    def _same(self, other):
        if not isinstance(other, FormAtPoint):
            raise TypeError("expected a FormAtPoint")
        if other.frame != self.frame:
            raise FrameMismatchError(f"frame {self.frame} vs {other.frame}")
        if other.degree != self.degree:
            raise ValueError("degree mismatch")

    def __add__(self, other):
        self._same(other)
        return FormAtPoint(self.degree, self.frame, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._same(other)
        return FormAtPoint(self.degree, self.frame, self.coeffs - other.coeffs)

    def __neg__(self):
        return FormAtPoint(self.degree, self.frame, -self.coeffs)

    def scale(self, factor):
        """Multiply by a scalar or a batch of scalars."""
        f = np.asarray(factor)[..., None]
        return FormAtPoint(self.degree, self.frame, f * self.coeffs)

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def conj(self):
        return FormAtPoint(self.degree, self.frame, np.conj(self.coeffs))

    @property
    def real(self):
        return FormAtPoint(self.degree, self.frame, np.real(self.coeffs))

    @property
    def imag(self):
        return FormAtPoint(self.degree, self.frame, np.imag(self.coeffs))

    def __xor__(self, other):
        return wedge(self, other)

    def max_abs(self):
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0


def _maybe_real(arr):
    if np.iscomplexobj(arr) and not np.any(arr.imag):
        return arr.real.copy()
    return arr


def wedge(a: FormAtPoint, b: FormAtPoint) -> FormAtPoint:
    """Graded-antisymmetric product of two forms in the same frame."""
    if a.frame != b.frame:
        raise FrameMismatchError(f"cannot wedge forms in frames {a.frame} and {b.frame}")
    p, q = a.degree, b.degree
    if p + q > DIM:
        raise ValueError("degrees sum past 4")
    batch = np.broadcast_shapes(a.batch_shape, b.batch_shape)
    dtype = np.result_type(a.coeffs, b.coeffs)
    out = np.zeros(batch + (len(_BASIS[p + q]),), dtype=dtype)
    for i, j, k, s in _WEDGE[(p, q)]:
        out[..., k] += s * a.coeffs[..., i] * b.coeffs[..., j]
    return FormAtPoint(p + q, a.frame, out)


def change_frame(form: FormAtPoint, jacobian, new_frame: Frame) -> FormAtPoint:
    """Pull ``form`` back along x = x(y), with ``jacobian[..., i, j] = dx^i/dy^j``."""
    K = np.asarray(jacobian)
    k = form.degree
    if k == 0:
        return FormAtPoint(0, new_frame, form.coeffs)
    src, dst = "abcd"[:k], "ABCD"[:k]
    spec = "..." + src + "".join(f",...{s}{d}" for s, d in zip(src, dst)) + "->..." + dst
    t = np.einsum(spec, form.tensor(), *([K] * k))
    return FormAtPoint.from_tensor(k, new_frame, t)


# ---------------------------------------------------------------------------
# finite differences

_STENCILS = {
    2: ((-1, 1), (-0.5, 0.5)),
    4: ((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12)),
    6: ((-3, -2, -1, 1, 2, 3), (-1 / 60, 9 / 60, -45 / 60, 45 / 60, -9 / 60, 1 / 60)),
}


def fd_partials(func: Callable, x, h, order: int = 2):
    """Central-difference partial derivatives of a vectorized function.

    ``func`` maps points of shape batch + (n,) to arrays of shape batch + out.
    ``h`` broadcasts against ``x`` (a scalar, a length-n array, or per-point
    steps). Returns an array of shape (n,) + batch + out whose leading index is
    the differentiation direction.
    """
    if order not in _STENCILS:
        raise ValueError(f"order must be one of {sorted(_STENCILS)}")
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    if np.any(h <= 0):
        raise ValueError("finite-difference step must be positive")
    offsets, weights = _STENCILS[order]
    shifted = []
    for i in range(n):
        for o in offsets:
            y = x.copy()
            y[..., i] += o * h[..., i]
            shifted.append(y)
    pts = np.stack(shifted, axis=0)
    try:
        vals = np.asarray(func(pts))
    except DomainError as exc:
        raise StencilError(f"finite-difference stencil leaves the domain: {exc}") from exc
    vals = vals.reshape((n, len(offsets)) + vals.shape[1:])
    extra = vals.ndim - 2 - (x.ndim - 1)  # trailing output dims
    w = np.asarray(weights).reshape((1, len(offsets)) + (1,) * (vals.ndim - 2))
    steps = np.moveaxis(h, -1, 0).reshape((n,) + x.shape[:-1] + (1,) * extra)
    return (w * vals).sum(axis=1) / steps


_SECOND = {
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    4: ((-2, -1, 0, 1, 2), (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12)),
    6: ((-3, -2, -1, 0, 1, 2, 3), (1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90)),
}


def fd_laplacian(func: Callable, x, h, order: int = 4):
    """Sum of unmixed second differences of a vectorized scalar function."""
    offsets, weights = _SECOND[order]
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    pts = []
    for i in range(n):
        for o in offsets:
            y = x.copy()
            y[..., i] += o * h[..., i]
            pts.append(y)
    try:
        vals = np.asarray(func(np.stack(pts, axis=0)))
    except DomainError as exc:
        raise StencilError(f"finite-difference stencil leaves the domain: {exc}") from exc
    vals = vals.reshape((n, len(offsets)) + vals.shape[1:])
    w = np.asarray(weights).reshape((1, len(offsets)) + (1,) * (vals.ndim - 2))
    second = (w * vals).sum(axis=1) / np.moveaxis(h, -1, 0) ** 2
    return second.sum(axis=0)


def exterior_derivative_fd(
    field: Callable, at, h=1e-4, order: int = 2, richardson: bool = False
) -> FormAtPoint:
    """Finite-difference exterior derivative of a form-valued field.

    ``field`` takes points of shape batch + (4,) and returns a FormAtPoint with
    that batch shape. With ``richardson=True`` the result combines steps h and
    2h to cancel the leading error term.
    """
    at = np.asarray(at, dtype=float)
    probe = field(at)
    k = probe.degree
    if k >= DIM:
        return FormAtPoint(DIM, probe.frame, np.zeros(probe.batch_shape + (1,)))

    def coeffs(pts):
        return field(pts).coeffs

    partials = fd_partials(coeffs, at, h, order)
    if richardson:
        coarse = fd_partials(coeffs, at, 2 * np.asarray(h), order)
        partials = partials + (partials - coarse) / (2**order - 1)
    out = np.zeros(probe.batch_shape + (len(_BASIS[k + 1]),), dtype=partials.dtype)
    for i in range(DIM):
        for n, J in enumerate(_BASIS[k]):
            if i in J:
                continue
            K = tuple(sorted((i,) + J))
            out[..., _INDEX[k + 1][K]] += _perm_sign((i,) + J) * partials[i][..., n]
    return FormAtPoint(k + 1, probe.frame, out)


# ---------------------------------------------------------------------------
# metrics and triples


@dataclass(frozen=True)
class MetricAtPoint:
    frame: Frame
    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.shape[-2:] != (DIM, DIM):
            raise ValueError("metric must be 4x4")
        sym = 0.5 * (g + np.swapaxes(g, -1, -2))
        object.__setattr__(self, "g", sym)


@dataclass(frozen=True)
class SylvesterResult:
    positive: bool
    minors: np.ndarray


def leading_minors(g):
    g = np.asarray(g, dtype=float)
    return np.stack([np.linalg.det(g[..., :k, :k]) for k in range(1, DIM + 1)], axis=-1)


def sylvester_positive(g) -> SylvesterResult:
    """Leading principal minors and whether all of them are positive."""
    mat = g.g if isinstance(g, MetricAtPoint) else np.asarray(g, dtype=float)
    minors = leading_minors(mat)
    return SylvesterResult(bool(np.all(minors > 0)), minors)


# G = TRIPLE_SIGN * J^T W3 with J = W1^{-1} W2. Calibrated so that the flat
# quaternionic triple gives the identity and the S = 0 semi-flat triple gives
# a positive metric.
TRIPLE_SIGN = 1.0


@dataclass(frozen=True)
class TripleMetric:
    metric: MetricAtPoint
    J: np.ndarray  # J = W1^{-1} W2
    complex_structures: tuple  # J_i with w_i(X, Y) = g(J_i X, Y)
    j_squared_residual: float
    asymmetry: float
    reconstruction_residual: float

    @property
    def g(self):
        return self.metric.g


def triple_to_metric(w1, w2, w3, tol: float = 1e-6, sym_tol: float = 1e-8) -> TripleMetric:
    """Metric and complex structures determined by three real 2-forms.

    Works on a single point or a batch. ``tol`` bounds |J^2 + I| and
    ``sym_tol`` bounds the antisymmetric part of g relative to |g|.
    """
    mats = []
    for w in (w1, w2, w3):
        if isinstance(w, FormAtPoint):
            if w.frame != w1.frame:
                raise FrameMismatchError("triple must share one frame")
            m = w.matrix()
        else:
            m = np.asarray(w)
        if np.iscomplexobj(m):
            if np.max(np.abs(m.imag)) > 1e-12 * max(1.0, np.max(np.abs(m))):
                raise ValueError("triple_to_metric expects real 2-forms")
            m = m.real
        mats.append(np.asarray(m, dtype=float))
    W1, W2, W3 = mats
    frame = w1.frame if isinstance(w1, FormAtPoint) else FRAME_ACTION_ANGLE
    eye = np.eye(DIM)
    try:
        J = np.linalg.solve(W1, W2)
    except np.linalg.LinAlgError as exc:
        raise NotHyperkahlerError("first 2-form is degenerate") from exc
    jres = float(np.max(np.abs(J @ J + eye)))
    if not jres <= tol:
        raise NotHyperkahlerError(
            f"not a hyperkähler triple at this point: |J^2 + I| = {jres:.3e}"
        )
    G = TRIPLE_SIGN * np.swapaxes(J, -1, -2) @ W3
    scale = float(np.max(np.abs(G)))
    asym = float(np.max(np.abs(G - np.swapaxes(G, -1, -2)))) / scale
    if not asym <= sym_tol:
        raise NotHyperkahlerError(f"extracted metric is not symmetric (rel. {asym:.3e})")
    metric = MetricAtPoint(frame, G)
    Gs = metric.g
    Ginv = np.linalg.inv(Gs)
    structures = tuple(-Ginv @ W for W in mats)
    recon = max(
        float(np.max(np.abs(np.swapaxes(Ji, -1, -2) @ Gs - W))) for Ji, W in zip(structures, mats)
    )
    return TripleMetric(metric, J, structures, jres, asym, recon)


def quaternion_residuals(structures: Sequence[np.ndarray]) -> dict:
    """|J_i^2 + I| for each structure and |J_1 J_2 - J_3| (up to orientation)."""
    eye = np.eye(DIM)
    J1, J2, J3 = structures
    out = {f"J{i + 1}^2+I": float(np.max(np.abs(J @ J + eye))) for i, J in enumerate(structures)}
    out["J1J2-J3"] = float(
        min(np.max(np.abs(J1 @ J2 - J3)), np.max(np.abs(J1 @ J2 + J3)))
    )
    return out
