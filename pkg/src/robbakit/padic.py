"""Capped absolute-precision arithmetic in Q_p and in monogenic extensions.

A :class:`PadicScalar` stores ``p**v * u`` where ``u`` is a unit known modulo
``p**(N - v)``; the value is therefore known modulo ``p**N``.  Zero is the
state ``v = inf`` and still carries the precision ``N`` at which it is zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

INF = math.inf
DEFAULT_PRECISION = 16


class PrecisionError(ArithmeticError):
    """Raised when an operation needs information below the known precision."""


class PrimeMismatch(ValueError):
    pass


class Comparison(enum.Enum):
    EQUAL = "equal"
    UNEQUAL = "unequal"
    INDISTINGUISHABLE = "indistinguishable"


def valuation_int(x: int, p: int) -> float:
    if x == 0:
        return INF
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def valuation_rational(x: Fraction | int, p: int) -> float:
    x = Fraction(x)
    if x == 0:
        return INF
    return valuation_int(x.numerator, p) - valuation_int(x.denominator, p)


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True, slots=True)
class PadicScalar:
    p: int
    v: float  # int, or INF for zero
    u: int
    N: int

    def __post_init__(self) -> None:
        if self.v == INF:
            if self.u != 0:
                raise ValueError("zero must have unit part 0")
            return
        rel = self.N - self.v
        if rel <= 0:
            raise ValueError("nonzero scalar needs positive relative precision")
        if not (0 < self.u < self.p ** rel) or self.u % self.p == 0:
            raise ValueError(f"unit part {self.u} invalid for p={self.p}, relative precision {rel}")

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls, p: int, N: int = DEFAULT_PRECISION) -> "PadicScalar":
        return cls(p, INF, 0, N)

    @classmethod
    def one(cls, p: int, N: int = DEFAULT_PRECISION) -> "PadicScalar":
        return cls.from_rational(p, 1, N)

    @classmethod
    def from_rational(cls, p: int, x: int | Fraction | str, N: int = DEFAULT_PRECISION) -> "PadicScalar":
        """Reduce the rational ``x`` to absolute precision ``N``."""
        x = Fraction(x)
        if x == 0:
            return cls.zero(p, N)
        v = int(valuation_rational(x, p))
        if v >= N:
            return cls.zero(p, N)
        rest = x / Fraction(p) ** v
        mod = p ** (N - v)
        u = rest.numerator * pow(rest.denominator, -1, mod) % mod
        return cls(p, v, u, N)

    @classmethod
    def from_parts(cls, p: int, v: float, u: int, N: int) -> "PadicScalar":
        """Build from a (possibly non-reduced) valuation/unit pair."""
        if v == INF or u == 0:
            return cls.zero(p, N)
        extra = valuation_int(u, p)
        return cls.from_rational(p, Fraction(u) * Fraction(p) ** int(v), N) if extra else cls._reduced(p, int(v), u, N)

    @classmethod
    def from_scaled_int(cls, p: int, c: int, shift: int, N: int) -> "PadicScalar":
        """``c * p**shift`` at absolute precision ``N`` without going through Fraction."""
        if c == 0:
            return cls.zero(p, N)
        vc = 0
        while c % p == 0:
            c //= p
            vc += 1
        v = vc + shift
        if v >= N:
            return cls.zero(p, N)
        return cls(p, v, c % p ** (N - v), N)

    @classmethod
    def _reduced(cls, p: int, v: int, u: int, N: int) -> "PadicScalar":
        if v >= N:
            return cls.zero(p, N)
        return cls(p, v, u % p ** (N - v), N)

    # queries -----------------------------------------------------------
    def is_zero(self) -> bool:
        return self.v == INF

    def valuation(self) -> float:
        return self.v

    @property
    def relative_precision(self) -> int:
        return 0 if self.is_zero() else int(self.N - self.v)

    def to_fraction(self) -> Fraction:
        """The canonical rational representative ``p**v * u``."""
        if self.is_zero():
            return Fraction(0)
        return Fraction(self.u) * Fraction(self.p) ** int(self.v)

    def residue(self, M: int | None = None) -> int:
        """Integer representative modulo ``p**M`` (``M <= N``); requires v >= 0."""
        M = self.N if M is None else M
        if M > self.N:
            raise PrecisionError("requested residue beyond known precision")
        if self.is_zero():
            return 0
        if self.v < 0:
            raise PrecisionError("scalar is not integral")
        return self.u * self.p ** int(self.v) % self.p ** M

    def with_precision(self, N: int) -> "PadicScalar":
        """Lower (never raise) the absolute precision."""
        if N > self.N:
            raise PrecisionError("cannot invent precision")
        if self.is_zero():
            return PadicScalar.zero(self.p, N)
        return PadicScalar._reduced(self.p, int(self.v), self.u, N)

    # arithmetic ----------------------------------------------------------
    def _check(self, other: "PadicScalar") -> None:
        if self.p != other.p:
            raise PrimeMismatch(f"primes differ: {self.p} vs {other.p}")

    def __add__(self, other: "PadicScalar") -> "PadicScalar":
        self._check(other)
        N = min(self.N, other.N)
        if self.is_zero():
            return other.with_precision(N)
        if other.is_zero():
            return self.with_precision(N)
        m = int(min(self.v, other.v))
        if m >= N:
            return PadicScalar.zero(self.p, N)
        s = self.u * self.p ** int(self.v - m) + other.u * self.p ** int(other.v - m)
        return PadicScalar.from_parts(self.p, m, s % self.p ** (N - m), N)

    def __neg__(self) -> "PadicScalar":
        if self.is_zero():
            return self
        return PadicScalar(self.p, self.v, (-self.u) % self.p ** int(self.N - self.v), self.N)

    def __sub__(self, other: "PadicScalar") -> "PadicScalar":
        return self + (-other)

    def __mul__(self, other: "PadicScalar") -> "PadicScalar":
        self._check(other)
        if self.is_zero() or other.is_zero():
            if self.is_zero() and other.is_zero():
                N = self.N + other.N
            elif self.is_zero():
                N = self.N + int(other.v)
            else:
                N = other.N + int(self.v)
            return PadicScalar.zero(self.p, N)
        v = int(self.v + other.v)
        rel = min(self.relative_precision, other.relative_precision)
        return PadicScalar(self.p, v, self.u * other.u % self.p ** rel, v + rel)

    def invert(self) -> "PadicScalar":
        if self.is_zero():
            raise PrecisionError("inverse of a scalar indistinguishable from zero")
        rel = self.relative_precision
        return PadicScalar(self.p, -int(self.v), pow(self.u, -1, self.p ** rel), rel - int(self.v))

    def __truediv__(self, other: "PadicScalar") -> "PadicScalar":
        return self * other.invert()

    def __pow__(self, e: int) -> "PadicScalar":
        if e < 0:
            return self.invert() ** (-e)
        if e == 0:
            return PadicScalar.one(self.p, self.relative_precision or self.N)
        base, result = self, None
        while e:
            if e & 1:
                result = base if result is None else result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def compare(self, other: "PadicScalar") -> Comparison:
        """Three-valued comparison at the common precision."""
        self._check(other)
        if not (self - other).is_zero():
            return Comparison.UNEQUAL
        if self.N == other.N:
            return Comparison.EQUAL
        return Comparison.INDISTINGUISHABLE

    def agrees(self, other: "PadicScalar") -> bool:
        return self.compare(other) is not Comparison.UNEQUAL

    def __repr__(self) -> str:
        if self.is_zero():
            return f"O({self.p}^{self.N})"
        return f"{self.p}^{int(self.v)}*{self.u} + O({self.p}^{self.N})"

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {"v": None if self.is_zero() else int(self.v), "u": str(self.u), "N": self.N}

    @classmethod
    def from_json(cls, p: int, data: dict) -> "PadicScalar":
        if data.get("v") is None:
            return cls.zero(p, int(data["N"]))
        return cls(p, int(data["v"]), int(data["u"]), int(data["N"]))


# ---------------------------------------------------------------------------
# coefficient rings


@dataclass(frozen=True)
class CoeffRing:
    """Q_p (``modulus`` is None) or Q_p[X]/(f) with ``f`` monic and integral.

    ``modulus`` lists the coefficients of f from the constant term upward,
    leading 1 included.
    """

    p: int
    N: int = DEFAULT_PRECISION
    modulus: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.modulus is not None:
            if len(self.modulus) < 2 or self.modulus[-1] != 1:
                raise ValueError("modulus must be monic of degree >= 1")

    @property
    def degree(self) -> int:
        return 1 if self.modulus is None else len(self.modulus) - 1

    @property
    def is_field_qp(self) -> bool:
        return self.modulus is None

    def scalar(self, x: int | Fraction | str) -> PadicScalar:
        return PadicScalar.from_rational(self.p, x, self.N)

    def element(self, coeffs: Sequence[int | Fraction | str | PadicScalar]) -> "CoeffElement":
        vals = [c if isinstance(c, PadicScalar) else self.scalar(c) for c in coeffs]
        vals += [PadicScalar.zero(self.p, self.N)] * (self.degree - len(vals))
        return CoeffElement(self, tuple(vals)).reduced()

    def zero(self) -> "CoeffElement":
        return self.element([0])

    def one(self) -> "CoeffElement":
        return self.element([1])

    def to_json(self) -> dict:
        if self.modulus is None:
            return {"kind": "Qp"}
        return {"kind": "extension", "modulus": [str(c) for c in self.modulus]}

    @classmethod
    def from_json(cls, p: int, N: int, data: dict | None) -> "CoeffRing":
        if not data or data.get("kind", "Qp") == "Qp":
            return cls(p, N)
        return cls(p, N, tuple(int(c) for c in data["modulus"]))


@dataclass(frozen=True)
class CoeffElement:
    ring: CoeffRing
    coeffs: tuple[PadicScalar, ...]

    def reduced(self) -> "CoeffElement":
        """Canonical reduction modulo f (a no-op once the length is deg f)."""
        f = self.ring.modulus
        c = list(self.coeffs)
        if f is None:
            return CoeffElement(self.ring, (c[0],)) if len(c) == 1 else self
        d = len(f) - 1
        while len(c) > d:
            top = c.pop()
            shift = len(c) - d
            for i in range(d):
                c[shift + i] = c[shift + i] - top * self.ring.scalar(f[i])
        return CoeffElement(self.ring, tuple(c))

    def __add__(self, other: "CoeffElement") -> "CoeffElement":
        return CoeffElement(self.ring, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "CoeffElement":
        return CoeffElement(self.ring, tuple(-a for a in self.coeffs))

    def __sub__(self, other: "CoeffElement") -> "CoeffElement":
        return self + (-other)

    def __mul__(self, other: "CoeffElement") -> "CoeffElement":
        p, N = self.ring.p, self.ring.N
        out = [PadicScalar.zero(p, N)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return CoeffElement(self.ring, tuple(out)).reduced()

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def valuation(self) -> float:
        return min(c.valuation() for c in self.coeffs)

    def multiplication_matrix(self) -> list[list[Fraction]]:
        """Matrix of x -> self*x on the power basis 1, X, ..., X^(d-1)."""
        d = self.ring.degree
        cols = []
        basis_elt = [self.ring.scalar(0)] * d
        for j in range(d):
            e = list(basis_elt)
            e[j] = self.ring.scalar(1)
            prod = self * CoeffElement(self.ring, tuple(e))
            cols.append([c.to_fraction() for c in prod.coeffs])
        return [[cols[j][i] for j in range(d)] for i in range(d)]

    def norm(self) -> Fraction:
        return _det([row[:] for row in self.multiplication_matrix()])

    def is_unit(self) -> bool:
        """Invertible in A at the working precision."""
        n = self.norm()
        return valuation_rational(n, self.ring.p) < self.ring.N

    def is_integral_unit(self) -> bool:
        """Invertible in the integral order Z_p[X]/(f)."""
        if any(c.valuation() < 0 for c in self.coeffs):
            return False
        return valuation_rational(self.norm(), self.ring.p) == 0

    def invert(self) -> "CoeffElement":
        m = self.multiplication_matrix()
        d = len(m)
        rhs = [Fraction(1)] + [Fraction(0)] * (d - 1)
        sol = _solve(m, rhs)
        if sol is None:
            raise PrecisionError("element is not invertible")
        return self.ring.element(sol)

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self.coeffs]

    def __repr__(self) -> str:
        return f"CoeffElement({list(self.coeffs)})"


def _det(m: list[list[Fraction]]) -> Fraction:
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return det


def _solve(m: list[list[Fraction]], rhs: Iterable[Fraction]) -> list[Fraction] | None:
    n = len(m)
    aug = [row[:] + [b] for row, b in zip(m, rhs)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if piv is None:
            return None
        aug[c], aug[piv] = aug[piv], aug[c]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c] / aug[c][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[c])]
    return [aug[i][n] / aug[i][i] for i in range(n)]


def scalar_add(a: PadicScalar, b: PadicScalar) -> PadicScalar:
    return a + b


def scalar_mul(a: PadicScalar, b: PadicScalar) -> PadicScalar:
    return a * b


def scalar_invert(a: PadicScalar) -> PadicScalar:
    return a.invert()
