"""Windowed multivariate Laurent polynomials with certified-coefficient bookkeeping.

Every element carries, per variable, a certified exponent range
``[known_lo, known_hi]``.  Terms at exponents outside that range may be
missing (truncated away) or approximate; terms inside it are correct at the
coefficient precision.  A bound of ``-inf``/``+inf`` means nothing was lost
in that direction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Any, Iterable, Mapping, Sequence

from .padic import INF, CoeffElement, CoeffRing, PadicScalar, PrecisionError

DEFAULT_WINDOW = (-32, 32)

Exp = tuple[int, ...]


class CoordinateMismatch(ValueError):
    pass


class BudgetExhausted(PrecisionError):
    """A truncated expansion cannot be certified within the given budget."""


@dataclass(frozen=True)
class Window:
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.lo) != len(self.hi):
            raise ValueError("window bounds disagree in length")
        for a, b in zip(self.lo, self.hi):
            if not a <= 0 <= b:
                raise ValueError(f"window [{a}, {b}] must contain 0")

    @classmethod
    def uniform(cls, nvars: int, lo: int = DEFAULT_WINDOW[0], hi: int = DEFAULT_WINDOW[1]) -> "Window":
        return cls((lo,) * nvars, (hi,) * nvars)

    @property
    def nvars(self) -> int:
        return len(self.lo)

    def contains(self, e: Exp) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.lo, e, self.hi))

    def union(self, other: "Window") -> "Window":
        return Window(tuple(map(min, self.lo, other.lo)), tuple(map(max, self.hi, other.hi)))

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_json(cls, data: dict) -> "Window":
        return cls(tuple(data["lo"]), tuple(data["hi"]))


def ring_const(ring: CoeffRing, x: Any):
    """Coerce an integer/rational/scalar into a coefficient of ``ring``."""
    if isinstance(x, (PadicScalar, CoeffElement)):
        return x
    if ring.is_field_qp:
        return ring.scalar(x)
    return ring.element([x])


def _scalars_agree(a: PadicScalar, b: PadicScalar) -> bool:
    """Whether a - b vanishes at the lower of the two precisions, in integers."""
    p, N = a.p, min(a.N, b.N)
    m = int(min(0, a.v, b.v))
    ia = 0 if a.v >= N else a.u * p ** int(a.v - m)
    ib = 0 if b.v >= N else b.u * p ** int(b.v - m)
    return N <= m or (ia - ib) % p ** (N - m) == 0


def coeff_is_zero(c) -> bool:
    return c.is_zero()


@dataclass(frozen=True, eq=False)
class LaurentElement:
    ring: CoeffRing
    nvars: int
    terms: Mapping[Exp, Any]
    window: Window
    coords: str = "T"
    known_lo: tuple[float, ...] = field(default=())
    known_hi: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.coords not in ("T", "U"):
            raise ValueError("coords must be 'T' or 'U'")
        if self.window.nvars != self.nvars:
            raise ValueError("window has wrong number of variables")
        if not self.known_lo:
            object.__setattr__(self, "known_lo", (-INF,) * self.nvars)
        if not self.known_hi:
            object.__setattr__(self, "known_hi", (INF,) * self.nvars)
        clean = {}
        for e, c in self.terms.items():
            e = tuple(e)
            if len(e) != self.nvars:
                raise ValueError("exponent vector has wrong length")
            if not self.window.contains(e):
                raise ValueError(f"exponent {e} outside window")
            if not coeff_is_zero(c):
                clean[e] = c
        object.__setattr__(self, "terms", clean)

    # construction ------------------------------------------------------
    @classmethod
    def from_terms(
        cls,
        ring: CoeffRing,
        terms: Mapping[Exp, Any] | Iterable[tuple[Exp, Any]],
        nvars: int | None = None,
        coords: str = "T",
        window: Window | None = None,
    ) -> "LaurentElement":
        items = dict(terms)
        if nvars is None:
            if not items:
                raise ValueError("nvars needed for an empty element")
            nvars = len(next(iter(items)))
        window = window or Window.uniform(nvars)
        return cls(ring, nvars, {tuple(e): ring_const(ring, c) for e, c in items.items()}, window, coords)

    @classmethod
    def zero(cls, ring: CoeffRing, nvars: int, coords: str = "T", window: Window | None = None) -> "LaurentElement":
        return cls(ring, nvars, {}, window or Window.uniform(nvars), coords)

    @classmethod
    def monomial(cls, ring: CoeffRing, e: Exp, coeff: Any = 1, coords: str = "T", window: Window | None = None) -> "LaurentElement":
        return cls.from_terms(ring, {tuple(e): coeff}, len(e), coords, window)

    def like(self, terms: Mapping[Exp, Any], known_lo=None, known_hi=None, coords=None, window=None) -> "LaurentElement":
        return LaurentElement(
            self.ring,
            self.nvars,
            terms,
            window or self.window,
            coords or self.coords,
            tuple(known_lo) if known_lo is not None else self.known_lo,
            tuple(known_hi) if known_hi is not None else self.known_hi,
        )

    # queries -----------------------------------------------------------
    @property
    def p(self) -> int:
        return self.ring.p

    def is_zero(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        return all(x == -INF for x in self.known_lo) and all(x == INF for x in self.known_hi)

    def certified_box(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """The certified exponent range clipped to the storage window."""
        lo = tuple(max(int(a) if a != -INF else w, w) for a, w in zip(self.known_lo, self.window.lo))
        hi = tuple(min(int(b) if b != INF else w, w) for b, w in zip(self.known_hi, self.window.hi))
        return lo, hi

    def is_certified(self, e: Exp) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.known_lo, e, self.known_hi))

    def coeff(self, e: Exp):
        return self.terms.get(tuple(e), ring_const(self.ring, 0))

    def support_bounds(self, alpha: int) -> tuple[float, float]:
        """Range of exponents in variable alpha that may carry nonzero terms."""
        if self.terms:
            lo = min(e[alpha] for e in self.terms)
            hi = max(e[alpha] for e in self.terms)
        else:
            lo, hi = INF, -INF
        if self.known_lo[alpha] != -INF:
            lo = -INF
        if self.known_hi[alpha] != INF:
            hi = INF
        return lo, hi

    def min_valuation(self) -> float:
        return min((c.valuation() for c in self.terms.values()), default=INF)

    # arithmetic ----------------------------------------------------------
    def _check(self, other: "LaurentElement") -> None:
        if self.coords != other.coords:
            raise CoordinateMismatch("coordinate flags differ")
        if self.nvars != other.nvars or self.ring != other.ring:
            raise CoordinateMismatch("variable set or coefficient ring differ")

    def __add__(self, other: "LaurentElement") -> "LaurentElement":
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return LaurentElement(
            self.ring,
            self.nvars,
            out,
            self.window.union(other.window),
            self.coords,
            tuple(map(max, self.known_lo, other.known_lo)),
            tuple(map(min, self.known_hi, other.known_hi)),
        )

    def __neg__(self) -> "LaurentElement":
        return self.like({e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "LaurentElement") -> "LaurentElement":
        return self + (-other)

    def scale(self, c: Any) -> "LaurentElement":
        c = ring_const(self.ring, c)
        return self.like({e: c * x for e, x in self.terms.items()})

    def __mul__(self, other: "LaurentElement") -> "LaurentElement":
        self._check(other)
        window = self.window.union(other.window)
        out: dict[Exp, Any] = {}
        dropped_lo = [False] * self.nvars
        dropped_hi = [False] * self.nvars
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if not window.contains(e):
                    for a in range(self.nvars):
                        if e[a] < window.lo[a]:
                            dropped_lo[a] = True
                        if e[a] > window.hi[a]:
                            dropped_hi[a] = True
                    continue
                c = c1 * c2
                out[e] = out[e] + c if e in out else c
        known_lo, known_hi = [], []
        for a in range(self.nvars):
            flo, fhi = self.support_bounds(a)
            glo, ghi = other.support_bounds(a)
            hi = INF
            if self.known_hi[a] != INF:
                hi = min(hi, self.known_hi[a] + glo)
            if other.known_hi[a] != INF:
                hi = min(hi, other.known_hi[a] + flo)
            lo = -INF
            if self.known_lo[a] != -INF:
                lo = max(lo, self.known_lo[a] + ghi)
            if other.known_lo[a] != -INF:
                lo = max(lo, other.known_lo[a] + fhi)
            if dropped_hi[a]:
                hi = min(hi, window.hi[a])
            if dropped_lo[a]:
                lo = max(lo, window.lo[a])
            known_lo.append(_clean_bound(lo))
            known_hi.append(_clean_bound(hi))
        return LaurentElement(self.ring, self.nvars, out, window, self.coords, tuple(known_lo), tuple(known_hi))

    def __pow__(self, k: int) -> "LaurentElement":
        if k < 0:
            raise ValueError("negative powers need an explicit inverse")
        result = self.like({(0,) * self.nvars: ring_const(self.ring, 1)}, (-INF,) * self.nvars, (INF,) * self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def restrict_known(self, known_lo=None, known_hi=None) -> "LaurentElement":
        """Shrink the certified range (never enlarges it)."""
        lo = self.known_lo if known_lo is None else tuple(map(max, self.known_lo, known_lo))
        hi = self.known_hi if known_hi is None else tuple(map(min, self.known_hi, known_hi))
        return self.like(self.terms, lo, hi)

    def truncate(self, window: Window) -> "LaurentElement":
        out = {e: c for e, c in self.terms.items() if window.contains(e)}
        lo, hi = list(self.known_lo), list(self.known_hi)
        for e in self.terms:
            if e in out:
                continue
            for a in range(self.nvars):
                if e[a] < window.lo[a]:
                    lo[a] = max(lo[a], window.lo[a])
                if e[a] > window.hi[a]:
                    hi[a] = min(hi[a], window.hi[a])
        return LaurentElement(self.ring, self.nvars, out, window, self.coords, tuple(lo), tuple(hi))

    # comparisons -----------------------------------------------------------
    def agrees_with(self, other: "LaurentElement") -> bool:
        """Equality at precision on the common certified region."""
        self._check(other)
        lo = tuple(map(max, self.known_lo, other.known_lo))
        hi = tuple(map(min, self.known_hi, other.known_hi))

        def inside(e: Exp) -> bool:
            return all(a <= x <= b for a, x, b in zip(lo, e, hi))

        zero = ring_const(self.ring, 0)
        same = _scalars_agree if self.ring.is_field_qp else lambda a, b: (a - b).is_zero()
        for e in set(self.terms) | set(other.terms):
            if not inside(e):
                continue
            if not same(self.terms.get(e, zero), other.terms.get(e, zero)):
                return False
        return True

    def __repr__(self) -> str:
        parts = []
        for e in sorted(self.terms):
            mono = "*".join(f"{self.coords}{i + 1}^{x}" for i, x in enumerate(e) if x) or "1"
            parts.append(f"({self.terms[e]!r})*{mono}")
        return " + ".join(parts) or "0"

    # serialization -----------------------------------------------------------
    def to_json(self) -> dict:
        def coeff_json(c):
            return c.to_json() if isinstance(c, PadicScalar) else {"ext": c.to_json()}

        return {
            "coords": self.coords,
            "window": self.window.to_json(),
            "terms": [{"exp": list(e), "coeff": coeff_json(self.terms[e])} for e in sorted(self.terms)],
            "known_lo": [None if x == -INF else int(x) for x in self.known_lo],
            "known_hi": [None if x == INF else int(x) for x in self.known_hi],
        }

    @classmethod
    def from_json(cls, ring: CoeffRing, data: dict) -> "LaurentElement":
        window = Window.from_json(data["window"])
        terms = {}
        for t in data["terms"]:
            c = t["coeff"]
            if isinstance(c, str):
                val = ring_const(ring, Fraction(c))
            elif "ext" in c:
                val = CoeffElement(ring, tuple(PadicScalar.from_json(ring.p, x) for x in c["ext"]))
            else:
                val = PadicScalar.from_json(ring.p, c)
            terms[tuple(t["exp"])] = val
        lo = tuple(-INF if x is None else x for x in data.get("known_lo", [None] * window.nvars))
        hi = tuple(INF if x is None else x for x in data.get("known_hi", [None] * window.nvars))
        return cls(ring, window.nvars, terms, window, data.get("coords", "T"), lo, hi)


def _clean_bound(x: float) -> float:
    if x in (INF, -INF):
        return x
    return int(x)


def lp_add(f: LaurentElement, g: LaurentElement) -> LaurentElement:
    return f + g


def lp_mul(f: LaurentElement, g: LaurentElement) -> LaurentElement:
    return f * g


# ---------------------------------------------------------------------------
# Gauss valuations


def _radius_vector(t: Sequence[Fraction | int | str] | Fraction | int, nvars: int) -> tuple[Fraction, ...]:
    if not isinstance(t, (list, tuple)):
        t = (t,) * nvars
    tt = tuple(Fraction(x) for x in t)
    if len(tt) != nvars:
        raise ValueError("radius vector has wrong length")
    if any(x <= 0 for x in tt):
        raise ValueError("radii must be positive")
    return tt


def gauss_valuation(f: LaurentElement, t) -> Fraction | float:
    """min over monomials of val(c) + sum_alpha e_alpha * t_alpha (inf for zero)."""
    if f.coords != "T":
        raise CoordinateMismatch("Gauss valuations are defined in T-coordinates")
    tt = _radius_vector(t, f.nvars)
    best: Fraction | float = INF
    for e, c in f.terms.items():
        val = c.valuation() + sum(x * r for x, r in zip(e, tt))
        if val < best:
            best = val
    return best


def interval_valuation(f: LaurentElement, interval) -> Fraction | float:
    """Minimum of the Gauss valuation over the corners of a multi-interval."""
    s, r = interval_bounds(interval, f.nvars)
    corners = itertools.product(*[(a, b) for a, b in zip(s, r)])
    return min(gauss_valuation(f, c) for c in corners)


def interval_bounds(interval, nvars: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    if hasattr(interval, "s") and hasattr(interval, "r"):
        s, r = interval.s, interval.r
    else:
        s, r = interval
    s = _radius_vector(s, nvars)
    r = _radius_vector(r, nvars)
    if any(a > b for a, b in zip(s, r)):
        raise ValueError("invalid interval: need 0 < s <= r")
    return s, r


# ---------------------------------------------------------------------------
# coordinate changes


def _binomial_expansion(k: int, sign: int, hi: int) -> tuple[dict[int, int], bool]:
    """Coefficients of (X + sign)^k (k >= 0), or of (1 + sign*X)^k series for k < 0.

    Returns (coeffs by degree, truncated?) for degrees up to ``hi``.
    """
    if k >= 0:
        return {j: comb(k, j) * sign ** (k - j) for j in range(k + 1)}, False
    # (1 + X)^k for negative k: sum_j C(k, j) X^j, C(k, j) = (-1)^j C(-k + j - 1, j)
    out = {j: (-1) ** j * comb(-k + j - 1, j) for j in range(hi + 1)}
    return out, True


def change_coords(f: LaurentElement, target: str) -> LaurentElement:
    """Convert between T-coordinates and U = 1 + T coordinates.

    Exact on polynomials.  Negative powers of U expand into T-power series
    truncated at the window, with the certified range reported.  Negative
    powers of T have no convergent U-expansion on the annulus and raise
    :class:`BudgetExhausted`.
    """
    if target == f.coords:
        return f
    if target not in ("T", "U"):
        raise ValueError("target must be 'T' or 'U'")
    if not f.is_exact():
        raise BudgetExhausted("coordinate change of an element with an uncertified tail")
    ring, n, W = f.ring, f.nvars, f.window
    if f.coords == "T" and any(x < 0 for e in f.terms for x in e):
        raise BudgetExhausted("negative T-powers have no certified U-expansion")
    sign = -1 if f.coords == "T" else 1  # T = U - 1, U = T + 1
    known_hi = [INF] * n
    out: dict[Exp, Any] = {}
    for e, c in f.terms.items():
        per_var = []
        for a, k in enumerate(e):
            coeffs, truncated = _binomial_expansion(k, sign, W.hi[a])
            if truncated:
                known_hi[a] = min(known_hi[a], W.hi[a])
            per_var.append([(j, v) for j, v in coeffs.items() if v and j <= W.hi[a]])
            if not truncated and k > W.hi[a]:
                known_hi[a] = min(known_hi[a], W.hi[a])
        for combo in itertools.product(*per_var):
            exp = tuple(j for j, _ in combo)
            mult = math.prod(v for _, v in combo)
            term = c * ring_const(ring, mult)
            out[exp] = out[exp] + term if exp in out else term
    return LaurentElement(ring, n, out, W, target, (-INF,) * n, tuple(_clean_bound(x) for x in known_hi))
