"""Robba-ring elements over multi-intervals with perfection decorations.

Radii are valuation coordinates: ``t`` means ``|T| = p**(-t)``, so an
interval ``[s, r]`` with ``0 < s <= r`` is the annulus
``p**(-r) <= |T| <= p**(-s)``.

A decorated element stores a Laurent *body* ``b`` at tower level ``n``
(per variable) and stands for ``prod_alpha phi_alpha^(-n_alpha)(b)``.  The
``interval`` of a :class:`RobbaElement` is the interval of the represented
element; the body itself lives on :meth:`RobbaElement.body_interval`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .laurent import LaurentElement, gauss_valuation, interval_valuation
from .padic import INF

KINDS = ("plain", "breve", "tilde")
_KIND_RANK = {k: i for i, k in enumerate(KINDS)}

# (kind on J, kind on I \ J) for the eight decorated rings; the retained
# five are the ones every uniform test runs over.
DECORATIONS = (
    ("breve", "plain"),
    ("tilde", "plain"),
    ("plain", "breve"),
    ("breve", "breve"),
    ("tilde", "breve"),
    ("plain", "tilde"),
    ("breve", "tilde"),
    ("tilde", "tilde"),
)
RETAINED_DECORATIONS = tuple(DECORATIONS[i] for i in (0, 1, 3, 4, 7))


class DecorationError(ValueError):
    pass


class IntervalError(ValueError):
    pass


def radius_vector(t, nvars: int | None = None) -> tuple[Fraction, ...]:
    if not isinstance(t, (list, tuple)):
        if nvars is None:
            raise ValueError("nvars needed for a scalar radius")
        t = (t,) * nvars
    out = tuple(Fraction(x) for x in t)
    if nvars is not None and len(out) != nvars:
        raise ValueError("radius vector has wrong length")
    if any(x <= 0 for x in out):
        raise ValueError("radii must be positive")
    return out


def radius_cap(p: int) -> Fraction:
    """Largest radius in the regime where v_t(phi f) = v_{pt}(f)."""
    return Fraction(1, p - 1)


@dataclass(frozen=True)
class IntervalVector:
    s: tuple[Fraction, ...]
    r: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        s = radius_vector(self.s)
        r = radius_vector(self.r)
        if len(s) != len(r):
            raise IntervalError("s and r have different lengths")
        if any(a > b for a, b in zip(s, r)):
            raise IntervalError(f"invalid interval: need 0 < s <= r, got s={s}, r={r}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "r", r)

    @classmethod
    def of(cls, s, r, nvars: int = 1) -> "IntervalVector":
        return cls(radius_vector(s, nvars), radius_vector(r, nvars))

    @property
    def nvars(self) -> int:
        return len(self.s)

    def contains(self, other: "IntervalVector") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.s, self.r, other.s, other.r))

    def contains_radius(self, t: Sequence[Fraction]) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.s, t, self.r))

    def intersect(self, other: "IntervalVector") -> "IntervalVector | None":
        s = tuple(map(max, self.s, other.s))
        r = tuple(map(min, self.r, other.r))
        if any(a > b for a, b in zip(s, r)):
            return None
        return IntervalVector(s, r)

    def scale(self, alpha: int, factor: Fraction, cap: Fraction | None = None) -> "IntervalVector":
        s, r = list(self.s), list(self.r)
        s[alpha] *= factor
        r[alpha] *= factor
        if cap is not None:
            r[alpha] = min(r[alpha], cap)
            if s[alpha] > r[alpha]:
                raise IntervalError("interval collapses under the radius cap")
        return IntervalVector(tuple(s), tuple(r))

    def replace(self, alpha: int, s: Fraction, r: Fraction) -> "IntervalVector":
        ss, rr = list(self.s), list(self.r)
        ss[alpha], rr[alpha] = Fraction(s), Fraction(r)
        return IntervalVector(tuple(ss), tuple(rr))

    def admissible(self, p: int) -> bool:
        """s_alpha <= r_alpha / p for every variable."""
        return all(a * p <= b for a, b in zip(self.s, self.r))

    def corners(self) -> list[tuple[Fraction, ...]]:
        import itertools

        return [tuple(c) for c in itertools.product(*zip(self.s, self.r))]

    def to_json(self) -> dict:
        return {"s": [str(x) for x in self.s], "r": [str(x) for x in self.r]}

    @classmethod
    def from_json(cls, data: dict) -> "IntervalVector":
        return cls(tuple(Fraction(x) for x in data["s"]), tuple(Fraction(x) for x in data["r"]))

    def __str__(self) -> str:
        return " x ".join(f"[{a}, {b}]" for a, b in zip(self.s, self.r))


@dataclass(frozen=True)
class PerfectionTag:
    kinds: tuple[str, ...]
    levels: tuple[int, ...]
    eps: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if len(self.kinds) != len(self.levels):
            raise DecorationError("kinds and levels disagree in length")
        for k, n in zip(self.kinds, self.levels):
            if k not in KINDS:
                raise DecorationError(f"unknown kind {k!r}")
            if n < 0:
                raise DecorationError("tower levels are nonnegative")
            if k == "plain" and n:
                raise DecorationError("plain variables sit at level 0")
        object.__setattr__(self, "eps", Fraction(self.eps))
        if self.eps < 0:
            raise DecorationError("seminorm slack must be >= 0")
        if self.eps and "tilde" not in self.kinds:
            raise DecorationError("only tilde decorations carry seminorm slack")

    @classmethod
    def plain(cls, nvars: int) -> "PerfectionTag":
        return cls(("plain",) * nvars, (0,) * nvars)

    @classmethod
    def for_decoration(cls, decoration: tuple[str, str], J: Iterable[int], nvars: int, eps=0) -> "PerfectionTag":
        """Tag with kind ``decoration[0]`` on J and ``decoration[1]`` on the rest."""
        J = set(J)
        kinds = tuple(decoration[0] if a in J else decoration[1] for a in range(nvars))
        return cls(kinds, (0,) * nvars, Fraction(eps) if "tilde" in kinds else Fraction(0))

    @property
    def nvars(self) -> int:
        return len(self.kinds)

    def decoration(self, J: Iterable[int]) -> tuple[str, str]:
        J = set(J)
        inside = {self.kinds[a] for a in J} or {"plain"}
        outside = {self.kinds[a] for a in range(self.nvars) if a not in J} or {"plain"}
        if len(inside) != 1 or len(outside) != 1:
            raise DecorationError("kinds are not uniform on J and its complement")
        return inside.pop(), outside.pop()

    def is_plain(self) -> bool:
        return all(k == "plain" for k in self.kinds)

    def merge(self, other: "PerfectionTag") -> "PerfectionTag":
        """Upward merge: the larger kind per variable, the larger level and slack."""
        if self.nvars != other.nvars:
            raise DecorationError("variable sets differ")
        kinds = tuple(max(a, b, key=_KIND_RANK.__getitem__) for a, b in zip(self.kinds, other.kinds))
        levels = tuple(map(max, self.levels, other.levels))
        return PerfectionTag(kinds, levels, max(self.eps, other.eps))

    def refines(self, other: "PerfectionTag") -> bool:
        """True when every kind of ``other`` is at least the kind here."""
        return all(_KIND_RANK[a] <= _KIND_RANK[b] for a, b in zip(self.kinds, other.kinds))

    def with_levels(self, levels: Sequence[int]) -> "PerfectionTag":
        return PerfectionTag(self.kinds, tuple(levels), self.eps)

    def to_json(self) -> dict:
        return {"kinds": list(self.kinds), "levels": list(self.levels), "eps": str(self.eps)}

    @classmethod
    def from_json(cls, data: dict) -> "PerfectionTag":
        return cls(tuple(data["kinds"]), tuple(data["levels"]), Fraction(data.get("eps", "0")))


@dataclass(frozen=True)
class SlackValue:
    """A valuation known up to a seminorm slack: the norm is p**(-value) +- eps."""

    value: Fraction | float
    eps: Fraction

    def norm_at_most(self, bound: Fraction, p: int) -> bool:
        return norm_le(self.value, bound, p)


def norm_le(v: Fraction | float, eps: Fraction, p: int) -> bool:
    """Exact test of p**(-v) <= eps for rational v."""
    eps = Fraction(eps)
    if v == INF:
        return True
    if eps == 0:
        return False
    v = Fraction(v)
    a, b = v.numerator, v.denominator
    # p^(-a/b) <= c/d  <=>  p^(-a) * d^b <= c^b
    lhs = Fraction(p) ** (-a) * Fraction(eps.denominator) ** b
    return lhs <= Fraction(eps.numerator) ** b


@dataclass(frozen=True, eq=False)
class RobbaElement:
    body: LaurentElement
    interval: IntervalVector
    tag: PerfectionTag = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.tag is None:
            object.__setattr__(self, "tag", PerfectionTag.plain(self.body.nvars))
        if self.interval.nvars != self.body.nvars or self.tag.nvars != self.body.nvars:
            raise ValueError("body, interval and tag disagree on the variable set")

    @property
    def p(self) -> int:
        return self.body.p

    @property
    def nvars(self) -> int:
        return self.body.nvars

    @property
    def guaranteed_window(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.body.certified_box()

    def body_interval(self) -> IntervalVector:
        """Interval on which the body lives: t -> t / p**n per variable."""
        iv = self.interval
        for a, n in enumerate(self.tag.levels):
            if n:
                iv = iv.scale(a, Fraction(1, self.p**n))
        return iv

    def with_body(self, body: LaurentElement, interval: IntervalVector | None = None, tag: PerfectionTag | None = None) -> "RobbaElement":
        return RobbaElement(body, interval or self.interval, tag or self.tag)

    def is_zero(self) -> bool:
        return self.body.is_zero()

    def valuation(self) -> Fraction | float:
        """Interval valuation (sup-norm over the polyannulus) of the represented element."""
        return interval_valuation(self.body, self.body_interval())

    def __add__(self, other: "RobbaElement") -> "RobbaElement":
        x, y = align_levels(self, other)
        iv = x.interval.intersect(y.interval)
        if iv is None:
            raise IntervalError("intervals do not overlap")
        return RobbaElement(x.body + y.body, iv, x.tag)

    def __neg__(self) -> "RobbaElement":
        return self.with_body(-self.body)

    def __sub__(self, other: "RobbaElement") -> "RobbaElement":
        return self + (-other)

    def __mul__(self, other: "RobbaElement") -> "RobbaElement":
        x, y = align_levels(self, other)
        iv = x.interval.intersect(y.interval)
        if iv is None:
            raise IntervalError("intervals do not overlap")
        return RobbaElement(x.body * y.body, iv, x.tag)

    def agrees_with(self, other: "RobbaElement") -> bool:
        """Equality after alignment: exact on guaranteed windows, or up to slack for tilde."""
        x, y = align_levels(self, other)
        if x.tag.eps == 0:
            return x.body.agrees_with(y.body)
        diff = x.body - y.body
        iv = x.interval.intersect(y.interval)
        if iv is None:
            raise IntervalError("intervals do not overlap")
        body_iv = RobbaElement(diff, iv, x.tag).body_interval()
        return norm_le(interval_valuation(diff, body_iv), x.tag.eps, self.p)

    def to_json(self) -> dict:
        return {"body": self.body.to_json(), "interval": self.interval.to_json(), "tag": self.tag.to_json()}

    def __repr__(self) -> str:
        return f"RobbaElement({self.body!r} on {self.interval}, {self.tag.kinds}, levels={self.tag.levels})"


def plain_element(body: LaurentElement, interval: IntervalVector) -> RobbaElement:
    return RobbaElement(body, interval, PerfectionTag.plain(body.nvars))


def restrict_interval(x: RobbaElement, target: IntervalVector) -> RobbaElement:
    if not x.interval.contains(target):
        raise IntervalError(f"{target} is not contained in {x.interval}")
    return RobbaElement(x.body, target, x.tag)


def raise_level(x: RobbaElement, alpha: int, steps: int = 1) -> RobbaElement:
    """Re-express x at a higher tower level in variable alpha (body gains phi_alpha)."""
    from .operators import phi_laurent

    if steps < 0:
        raise ValueError("levels only go up")
    if steps and x.tag.kinds[alpha] == "plain":
        raise DecorationError("plain variables have no tower")
    body = x.body
    for _ in range(steps):
        body = phi_laurent(body, alpha)
    levels = list(x.tag.levels)
    levels[alpha] += steps
    return RobbaElement(body, x.interval, x.tag.with_levels(levels))


def upgrade_tag(x: RobbaElement, tag: PerfectionTag) -> RobbaElement:
    """Re-tag upward (kinds may only grow); levels are then raised to ``tag.levels``."""
    if not x.tag.refines(tag):
        raise DecorationError("decorations only move upward (plain -> breve -> tilde)")
    y = RobbaElement(x.body, x.interval, PerfectionTag(tag.kinds, x.tag.levels, max(x.tag.eps, tag.eps)))
    for a, (n0, n1) in enumerate(zip(x.tag.levels, tag.levels)):
        if n1 < n0:
            raise DecorationError("target level below the current level")
        if n1 > n0:
            y = raise_level(y, a, n1 - n0)
    return y


def align_levels(x: RobbaElement, y: RobbaElement) -> tuple[RobbaElement, RobbaElement]:
    if x.nvars != y.nvars:
        raise DecorationError("variable sets differ")
    if x.body.coords != y.body.coords:
        raise DecorationError("coordinate conventions differ")
    merged = x.tag.merge(y.tag)
    return upgrade_tag(x, merged), upgrade_tag(y, merged)


def frechet_seminorm(x: RobbaElement, t) -> Fraction | float | SlackValue:
    """Gauss valuation of the represented element at radius t.

    For a body at level n the value is v_{t / p**n}(body).  Tilde elements
    return a :class:`SlackValue` carrying their slack.
    """
    tt = radius_vector(t, x.nvars)
    if not x.interval.contains_radius(tt):
        raise IntervalError(f"radius {tt} outside {x.interval}")
    scaled = tuple(a / Fraction(x.p) ** n for a, n in zip(tt, x.tag.levels))
    body = x.body
    if body.coords != "T":
        from .laurent import change_coords

        body = change_coords(body, "T")
    val = gauss_valuation(body, scaled)
    if "tilde" in x.tag.kinds:
        return SlackValue(val, x.tag.eps)
    return val


@dataclass
class RingFamily:
    """Finitely many elements indexed by intervals, compatible on overlaps."""

    members: Mapping[IntervalVector, RobbaElement]

    def intervals(self) -> list[IntervalVector]:
        return sorted(self.members, key=lambda iv: (iv.s, iv.r))

    def check_compatibility(self) -> list[tuple[IntervalVector, IntervalVector]]:
        """Pairs of overlapping intervals on which the restrictions disagree."""
        bad = []
        ivs = self.intervals()
        for i, a in enumerate(ivs):
            for b in ivs[i + 1 :]:
                common = a.intersect(b)
                if common is None:
                    continue
                xa = restrict_interval(self.members[a], common)
                xb = restrict_interval(self.members[b], common)
                if not xa.agrees_with(xb):
                    bad.append((a, b))
        return bad

    def restrict(self, target: IntervalVector) -> RobbaElement:
        for iv in self.intervals():
            if iv.contains(target):
                return restrict_interval(self.members[iv], target)
        raise IntervalError(f"no member covers {target}")

    def to_json(self) -> list[dict]:
        return [{"interval": iv.to_json(), "element": self.members[iv].to_json()} for iv in self.intervals()]
