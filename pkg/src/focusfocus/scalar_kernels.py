"""Scalar building blocks: K0/K1, the harmonic semi-global invariant, and the
regularized lattice sum behind the Ooguri-Vafa potential.

Everything here is a pure function of its inputs and broadcasts over numpy
arrays.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError

EULER_GAMMA = 0.57721566490153286061

# seam between the power series and Steed's continued fraction
_BESSEL_SEAM = 2.0
_SERIES_TERMS = 24
_CF_EPS = 1e-17
_CF_MAXIT = 20000


def _bessel_series(x):
    """K0 and K1 from the ascending series (accurate for 0 < x <= 2)."""
    y = 0.25 * x * x
    lnx2 = np.log(0.5 * x)
    i0 = np.zeros_like(x)
    i1 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    term0 = np.ones_like(x)  # y^k / (k!)^2
    term1 = np.ones_like(x)  # y^k / (k! (k+1)!)
    harmonic = 0.0  # H_k
    for k in range(_SERIES_TERMS):
        if k > 0:
            term0 = term0 * y / (k * k)
            term1 = term1 * y / (k * (k + 1))
            harmonic += 1.0 / k
        psi_k1 = -EULER_GAMMA + harmonic  # psi(k+1)
        psi_k2 = psi_k1 + 1.0 / (k + 1)  # psi(k+2)
        i0 = i0 + term0
        i1 = i1 + term1
        s0 = s0 + harmonic * term0
        s1 = s1 + (psi_k1 + psi_k2) * term1
    i1 = 0.5 * x * i1
    k0 = -(lnx2 + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / x + lnx2 * i1 - 0.25 * x * s1
    return k0, k1


def _bessel_steed(x):
    """K0 and K1 from Steed's continued fraction (x > 2)."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, _CF_MAXIT):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) <= _CF_EPS * np.abs(s)):
            break
    else:  # pragma: no cover - convergence is fast for every x > 2
        from .errors import NumericalFailure

        raise NumericalFailure("Steed continued fraction for K0/K1 did not converge")
    h = a1 * h
    with np.errstate(under="ignore"):
        k0 = np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def bessel_k0k1(x):
    """Return ``(K0(x), K1(x))`` for x > 0; scalars in, scalars out."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("modified Bessel K is defined for x > 0 only")
    flat = np.atleast_1d(arr).ravel()
    k0 = np.empty_like(flat)
    k1 = np.empty_like(flat)
    small = flat <= _BESSEL_SEAM
    if np.any(small):
        k0[small], k1[small] = _bessel_series(flat[small])
    if np.any(~small):
        k0[~small], k1[~small] = _bessel_steed(flat[~small])
    if arr.ndim == 0:
        return float(k0[0]), float(k1[0])
    return k0.reshape(arr.shape), k1.reshape(arr.shape)


def bessel_k0(x):
    """Modified Bessel function of the second kind, order zero."""
    return bessel_k0k1(x)[0]


def bessel_k1(x):
    """Modified Bessel function of the second kind, order one."""
    return bessel_k0k1(x)[1]


# ---------------------------------------------------------------------------
# branch bookkeeping on the punctured base disc

CHARTS = ("principal", "positive")


def branch_arg(c, chart: str = "principal"):
    """arg c on the declared chart: (-pi, pi] for ``principal``, (0, 2pi] for ``positive``."""
    if chart not in CHARTS:
        raise ValueError(f"unknown chart {chart!r}; expected one of {CHARTS}")
    c = np.asarray(c, dtype=complex)
    arg = np.angle(c)
    # np.angle(-1 - 0j) == -pi; fold it back into the half-open interval
    arg = np.where(arg <= -np.pi, arg + 2 * np.pi, arg)
    if chart == "positive":
        arg = np.where(arg <= 0.0, arg + 2 * np.pi, arg)
    return arg if arg.ndim else float(arg)


def branch_log(c, chart: str = "principal"):
    c = np.asarray(c, dtype=complex)
    if np.any(c == 0):
        raise DomainError("ln c is singular at c = 0")
    out = np.log(np.abs(c)) + 1j * branch_arg(c, chart)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class BasePoint:
    """A point c = c1 + i c2 of the base together with the chart fixing arg c."""

    c1: float
    c2: float
    chart: str = "principal"

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValueError(f"unknown chart {self.chart!r}")

    @property
    def c(self) -> complex:
        return complex(self.c1, self.c2)

    @property
    def modulus(self) -> float:
        return math.hypot(self.c1, self.c2)

    @property
    def arg(self) -> float:
        return branch_arg(self.c, self.chart)

    @classmethod
    def from_complex(cls, c: complex, chart: str = "principal") -> BasePoint:
        return cls(float(np.real(c)), float(np.imag(c)), chart)


@dataclass(frozen=True)
class ModelParams:
    """Semi-flat scale R, base disc radius epsilon, and the truncation of the
    instanton Bessel series (terms below ``series_tol``, at most ``max_terms``)."""

    R: float = 1.0
    epsilon: float = 0.5
    series_tol: float = 1e-18
    max_terms: int = 100000

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError("R must be positive")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not (self.series_tol > 0 and self.max_terms >= 1):
            raise DomainError("series truncation settings must be positive")


# ---------------------------------------------------------------------------
# the semi-global invariant


@dataclass(frozen=True)
class InvariantValues:
    S: object
    S1: object
    S2: object
    S_tilde: object
    S11: object
    S12: object

    @property
    def S22(self):
        return -self.S11


@dataclass(frozen=True)
class HarmonicInvariant:
    """S = Re f with f(c) = sum_k a_k c^k, k = 1..K (no constant term).

    ``coefficients`` holds (a_1, ..., a_K). Any harmonic function on a disc is
    the real part of a holomorphic one, and a polynomial truncation is exactly
    harmonic.
    """

    coefficients: tuple = ()
    radius: float = 1.0
    max_degree: int = field(default=16, repr=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(complex(a) for a in self.coefficients)
        if len(coeffs) > self.max_degree:
            raise ValueError(
                f"degree {len(coeffs)} exceeds max_degree={self.max_degree}"
            )
        if not self.radius > 0:
            raise DomainError("radius must be positive")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def zero(cls, radius: float = 1.0) -> HarmonicInvariant:
        return cls((), radius)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], radius: float = 1.0):
        """Build from ``[(re, im), ...]`` pairs, the config-file layout."""
        return cls(tuple(complex(re, im) for re, im in pairs), radius)

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    def _check(self, c):
        if np.any(np.abs(c) >= self.radius):
            raise DomainError(
                f"|c| must stay below the validity radius {self.radius}"
            )

    def holomorphic(self, c, order: int = 0):
        """f^(order)(c) by Horner's rule."""
        c = np.asarray(c, dtype=complex)
        self._check(c)
        # poly[k] multiplies c^k in f
        poly = [0j] + list(self.coefficients)
        for _ in range(order):
            poly = [k * poly[k] for k in range(1, len(poly))]
        acc = np.zeros_like(c)
        for a in reversed(poly):
            acc = acc * c + a
        return acc if acc.ndim else complex(acc)


def invariant_eval(S: HarmonicInvariant, c) -> InvariantValues:
    """S, S1, S2, conjugate S~, S11 and S12 at c (complex scalar or array)."""
    c = np.asarray(c, dtype=complex)
    f0 = np.asarray(S.holomorphic(c, 0))
    f1 = np.asarray(S.holomorphic(c, 1))
    f2 = np.asarray(S.holomorphic(c, 2))
    out = dict(
        S=f0.real,
        S_tilde=f0.imag,
        S1=f1.real,
        S2=-f1.imag,
        S11=f2.real,
        S12=-f2.imag,
    )
    if c.ndim == 0:
        out = {k: float(v) for k, v in out.items()}
    return InvariantValues(**out)


# ---------------------------------------------------------------------------
# regularized lattice sum


def _inv_hypot(rho2, y):
    return 1.0 / np.sqrt(rho2 + y * y)


def _tail(rho2, tau, N):
    """Euler-Maclaurin estimate of sum_{n>N} [f(n+tau) + f(n-tau) - 2/n]."""
    integral = 0.0
    g = -2.0 / N
    g1 = 2.0 / N**2
    g3 = 12.0 / N**4
    for y in (N + tau, N - tau):
        root = np.sqrt(rho2 + y * y)
        # log((y + root) / 2N) computed without cancellation
        num = (y - N) + (rho2 + y * y - N * N) / (root + N)
        integral = integral - np.log1p(num / (2.0 * N))
        u = rho2 + y * y
        g = g + 1.0 / root
        g1 = g1 - y * u**-1.5
        g3 = g3 + (9.0 * y * rho2 - 6.0 * y**3) * u**-3.5
    return integral - 0.5 * g - g1 / 12.0 + g3 / 720.0


def regularized_theta_sum(rho, tau):
    """sum_n [ 1/sqrt(rho^2 + (tau+n)^2) - kappa(n) ], kappa(0)=0, kappa(n)=1/|n|.

    The sum is taken in the symmetric limit, which makes it exactly 1-periodic
    in tau; tau is folded into [-1/2, 1/2] before summing.
    """
    rho = np.asarray(rho, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(rho < 0):
        raise DomainError("rho must be non-negative")
    rho, tau = np.broadcast_arrays(rho, tau)
    t = tau - np.round(tau)
    if np.any((rho == 0) & (t == 0)):
        raise SingularityError("lattice sum is singular at rho = 0, tau in Z")
    rho2 = rho * rho
    span = float(np.max(rho + np.abs(t))) if rho.size else 0.0
    N = max(50, math.ceil(10.0 * span))
    n = np.arange(1, N + 1, dtype=float).reshape((N,) + (1,) * rho.ndim)
    terms = _inv_hypot(rho2, n + t) + _inv_hypot(rho2, n - t) - 2.0 / n
    total = _inv_hypot(rho2, t) + terms.sum(axis=0) + _tail(rho2, t, float(N))
    return total if total.ndim else float(total)
