"""Rational transfer functions, 2x2 transfer matrices and their frequency responses.

Polynomials are stored densely in *ascending* powers of ``s``. No pole-zero
cancellation is attempted; products and sums are evaluated pointwise, which is
all the frequency-domain analysis needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import InvalidParameterError, PoleError, SingularMatrixError

POLE_TOL = 1e-300


def _trim(c) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1].copy()


@dataclass(frozen=True, eq=False)
class RationalTF:
    """num(s) / den(s) with real coefficients in ascending powers.

    The highest-power denominator coefficient is normalised to 1 and trailing
    (highest-power) zeros are dropped. The zero function has ``num == (0.0,)``.
    """

    num: tuple
    den: tuple

    def __init__(self, num: Sequence[float], den: Sequence[float] = (1.0,)):
        n = _trim(num)
        d = _trim(den)
        if not np.any(d):
            raise InvalidParameterError("denominator is the zero polynomial")
        lead = d[-1]
        object.__setattr__(self, "num", tuple(n / lead))
        object.__setattr__(self, "den", tuple(d / lead))

    # construction helpers
    @classmethod
    def const(cls, k: float) -> "RationalTF":
        return cls([k])

    @classmethod
    def s(cls) -> "RationalTF":
        return cls([0.0, 1.0])

    @classmethod
    def zero(cls) -> "RationalTF":
        return cls([0.0])

    @property
    def is_zero(self) -> bool:
        return not any(self.num)

    @property
    def order(self) -> int:
        return len(self.den) - 1

    def __call__(self, s):
        """Evaluate at complex ``s`` (scalar or array)."""
        s = np.asarray(s, dtype=complex)
        d = P.polyval(s, self.den)
        if np.any(np.abs(d) < POLE_TOL):
            bad = np.atleast_1d(s)[np.atleast_1d(np.abs(d) < POLE_TOL)][0]
            raise PoleError(f"evaluation at pole s={bad}", omega=float(np.imag(bad)))
        return P.polyval(s, self.num) / d

    def __add__(self, other):
        other = _as_tf(other)
        if self.den == other.den:
            return RationalTF(P.polyadd(self.num, other.num), self.den)
        num = P.polyadd(P.polymul(self.num, other.den), P.polymul(other.num, self.den))
        return RationalTF(num, P.polymul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return RationalTF(-np.asarray(self.num), self.den)

    def __sub__(self, other):
        return self + (-_as_tf(other))

    def __rsub__(self, other):
        return _as_tf(other) - self

    def __mul__(self, other):
        other = _as_tf(other)
        return RationalTF(P.polymul(self.num, other.num), P.polymul(self.den, other.den))

    __rmul__ = __mul__

    def inv(self) -> "RationalTF":
        if self.is_zero:
            raise ZeroDivisionError("inverse of the zero transfer function")
        return RationalTF(self.den, self.num)

    def __truediv__(self, other):
        return self * _as_tf(other).inv()

    def __rtruediv__(self, other):
        return _as_tf(other) * self.inv()

    def poles(self) -> np.ndarray:
        """Denominator roots (companion-matrix eigenvalues)."""
        if self.order == 0:
            return np.zeros(0, dtype=complex)
        return P.polyroots(self.den).astype(complex)

    def dc_limit(self) -> float:
        """Limit s -> 0, assuming it is finite."""
        num, den = np.array(self.num), np.array(self.den)
        k = 0
        while k < len(den) and den[k] == 0.0:
            if k < len(num) and num[k] != 0.0:
                return float("inf")
            k += 1
        return (num[k] if k < len(num) else 0.0) / den[k]

    def __repr__(self):
        return f"RationalTF(num={list(self.num)}, den={list(self.den)})"


def _as_tf(x) -> RationalTF:
    if isinstance(x, RationalTF):
        return x
    return RationalTF.const(float(x))


def tf_eval(tf: RationalTF, omega):
    """Value of ``tf`` at ``s = j*omega``; ``omega`` may be an array."""
    return tf(1j * np.asarray(omega, dtype=float))


def tf_add(a: RationalTF, b: RationalTF) -> RationalTF:
    return a + b


def tf_mul(a: RationalTF, b: RationalTF) -> RationalTF:
    return a * b


def tf_inv(a: RationalTF) -> RationalTF:
    return a.inv()


class TFMatrix:
    """2x2 matrix of :class:`RationalTF` entries."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        rows = [[_as_tf(e) for e in row] for row in entries]
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise InvalidParameterError("TFMatrix needs exactly 2x2 entries")
        self.entries = (tuple(rows[0]), tuple(rows[1]))

    @classmethod
    def identity(cls) -> "TFMatrix":
        return cls([[1.0, 0.0], [0.0, 1.0]])

    @classmethod
    def zeros(cls) -> "TFMatrix":
        return cls([[0.0, 0.0], [0.0, 0.0]])

    @classmethod
    def rotation_generator(cls) -> "TFMatrix":
        """J = [[0, -1], [1, 0]], the 90 degree rotation in the d-q plane."""
        return cls([[0.0, -1.0], [1.0, 0.0]])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def _map2(self, other, op):
        return TFMatrix([[op(self[i, j], other[i, j]) for j in range(2)] for i in range(2)])

    def __add__(self, other):
        return self._map2(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._map2(other, lambda a, b: a - b)

    def __neg__(self):
        return TFMatrix([[-self[i, j] for j in range(2)] for i in range(2)])

    def __mul__(self, k):
        # scalar (number or RationalTF) scaling
        return TFMatrix([[self[i, j] * k for j in range(2)] for i in range(2)])

    __rmul__ = __mul__

    def __matmul__(self, other):
        return TFMatrix(
            [[self[i, 0] * other[0, j] + self[i, 1] * other[1, j] for j in range(2)] for i in range(2)]
        )

    def __call__(self, s) -> np.ndarray:
        """Evaluate at complex ``s``; returns shape ``s.shape + (2, 2)``."""
        s = np.asarray(s, dtype=complex)
        out = np.empty(s.shape + (2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                try:
                    out[..., i, j] = self[i, j](s)
                except PoleError as exc:
                    raise PoleError(f"entry ({i + 1},{j + 1}): {exc}", omega=exc.omega, entry=(i, j)) from None
        return out

    def __repr__(self):
        return f"TFMatrix({[list(r) for r in self.entries]!r})"


def mat_eval(M: TFMatrix, omega) -> np.ndarray:
    """Entrywise evaluation at ``s = j*omega``."""
    return M(1j * np.asarray(omega, dtype=float))


@dataclass(frozen=True, eq=False)
class FreqResponse:
    """Sampled response: one 2x2 matrix (or scalar) per frequency in Hz."""

    freqs_hz: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if f.ndim != 1 or v.shape[:1] != f.shape:
            raise InvalidParameterError("values length must equal freqs length")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise InvalidParameterError("freqs_hz must be strictly increasing")
        f.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.freqs_hz.size

    @property
    def is_scalar(self) -> bool:
        return self.values.ndim == 1

    def entry(self, i: int, j: int) -> "FreqResponse":
        return FreqResponse(self.freqs_hz, self.values[:, i, j])

    def __add__(self, other: "FreqResponse") -> "FreqResponse":
        _check_grid(self, other)
        return FreqResponse(self.freqs_hz, self.values + other.values)

    def __sub__(self, other: "FreqResponse") -> "FreqResponse":
        _check_grid(self, other)
        return FreqResponse(self.freqs_hz, self.values - other.values)

    def inv(self) -> "FreqResponse":
        return FreqResponse(self.freqs_hz, mat2_inv(self.values))


def _check_grid(a: FreqResponse, b: FreqResponse):
    if a.freqs_hz.shape != b.freqs_hz.shape or not np.array_equal(a.freqs_hz, b.freqs_hz):
        raise InvalidParameterError("frequency responses live on different grids")


# -- closed-form 2x2 linear algebra ------------------------------------------


def mat2_det(A):
    A = np.asarray(A)
    return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]


def mat2_inv(A) -> np.ndarray:
    """Adjugate inverse, vectorised over leading axes."""
    A = np.asarray(A, dtype=complex)
    det = mat2_det(A)
    scale = np.max(np.abs(A), axis=(-2, -1)) ** 2
    bad = np.abs(det) <= 1e-14 * scale
    if np.any(bad):
        raise SingularMatrixError(f"singular 2x2 matrix ({int(np.sum(bad))} of {bad.size})")
    adj = np.empty_like(A)
    adj[..., 0, 0] = A[..., 1, 1]
    adj[..., 1, 1] = A[..., 0, 0]
    adj[..., 0, 1] = -A[..., 0, 1]
    adj[..., 1, 0] = -A[..., 1, 0]
    return adj / det[..., None, None]


def mat2_eig(A):
    """Both eigenvalues of 2x2 matrices as roots of l^2 - tr*l + det.

    Returns an array of shape ``A.shape[:-2] + (2,)``; unordered.
    """
    A = np.asarray(A, dtype=complex)
    tr = A[..., 0, 0] + A[..., 1, 1]
    det = mat2_det(A)
    disc = np.sqrt(tr * tr - 4.0 * det)
    # pick the larger-magnitude root first to avoid cancellation
    sgn = np.where(np.real(np.conj(tr) * disc) >= 0, 1.0, -1.0)
    l1 = 0.5 * (tr + sgn * disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        l2 = np.where(l1 != 0, det / l1, 0.5 * (tr - sgn * disc))
    return np.stack([l1, l2], axis=-1)


def track_eigenvalues(eigs) -> np.ndarray:
    """Order eigenvalue pairs along a sweep so each column is a continuous branch.

    ``eigs`` has shape (n, 2). The first point is ordered by descending
    magnitude; each later point keeps or swaps its pair, whichever lies nearer
    to the previous point.
    """
    e = np.array(eigs, dtype=complex, copy=True)
    if e.shape[0] == 0:
        return e
    if abs(e[0, 1]) > abs(e[0, 0]):
        e[0] = e[0, ::-1]
    for k in range(1, e.shape[0]):
        a, b = e[k]
        keep = abs(a - e[k - 1, 0]) + abs(b - e[k - 1, 1])
        swap = abs(b - e[k - 1, 0]) + abs(a - e[k - 1, 1])
        if swap < keep:
            e[k] = (b, a)
    return e
