"""Cyclotomic partial Frobenius, its left inverse psi, and the Gamma-action.

Conventions: ``phi_alpha(1 + T_alpha) = (1 + T_alpha)**p``,
``gamma_alpha(1 + T_alpha) = (1 + T_alpha)**chi``, both trivial on the other
variables, and ``psi_alpha`` keeps the ``U_alpha``-exponents divisible by p
and divides them by p (so ``psi(1) = 1`` and ``psi o phi = id``).

All three maps are Z_p-linear, so the work is done on integer polynomials
modulo ``p**M`` (``_IntPoly``: exponent tuple -> residue) after pulling out
the minimal valuation of the coefficients.  Monomial images are cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Any, Callable, Iterable, Sequence

from .laurent import BudgetExhausted, CoordinateMismatch, LaurentElement, Window, change_coords
from .padic import INF, CoeffElement, PadicScalar, valuation_int
from .robba import DecorationError, IntervalError, IntervalVector, RobbaElement, radius_cap

_IntPoly = dict  # tuple[int, ...] -> int, reduced mod q


# ---------------------------------------------------------------------------
# univariate integer series helpers (exponent -> residue)


def _mul1(a: dict, b: dict, q: int, lo: float = -INF, hi: float = INF) -> dict:
    out: dict[int, int] = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = e1 + e2
            if lo <= e <= hi:
                out[e] = (out.get(e, 0) + c1 * c2) % q
    return {e: c for e, c in out.items() if c}


def _pow1(a: dict, k: int, q: int, lo: float = -INF, hi: float = INF) -> dict:
    out = {0: 1 % q}
    base = a
    while k:
        if k & 1:
            out = _mul1(out, base, q, lo, hi)
        k >>= 1
        if k:
            base = _mul1(base, base, q, lo, hi)
    return out


def _add1(a: dict, b: dict, q: int, sign: int = 1) -> dict:
    out = dict(a)
    for e, c in b.items():
        out[e] = (out.get(e, 0) + sign * c) % q
    return {e: c for e, c in out.items() if c}


@lru_cache(maxsize=None)
def _phi_T_linear(p: int, q: int) -> tuple:
    # phi(T) = (1+T)^p - 1
    return tuple((j, comb(p, j) % q) for j in range(1, p + 1) if comb(p, j) % q)


@lru_cache(maxsize=None)
def _one_plus_pY(p: int, q: int) -> tuple:
    # phi(T) = T^p (1 + pY),  pY = sum_{j<p} C(p, j) T^(j-p)
    d = {0: 1 % q}
    for j in range(1, p):
        d[j - p] = comb(p, j) % q
    return tuple(sorted((e, c) for e, c in d.items() if c))


@lru_cache(maxsize=None)
def _inv_one_plus_pY(p: int, q: int) -> tuple:
    """(1 + pY)^(-1) = sum_m (-pY)^m; terms vanish mod q once p^m | q."""
    pY = {e: c for e, c in _one_plus_pY(p, q) if e}
    out = {0: 1 % q}
    term = {0: 1 % q}
    m = 0
    while term:
        term = {e: (-c) % q for e, c in _mul1(term, pY, q).items()}
        out = _add1(out, term, q)
        m += 1
        if m > 4 * q.bit_length() + 4:  # pragma: no cover - defensive
            raise RuntimeError("series for (1 + pY)^-1 did not terminate")
    return tuple(sorted(out.items()))


@lru_cache(maxsize=None)
def _phi_T_mono(p: int, q: int, k: int) -> tuple:
    if k >= 0:
        return tuple(sorted(_pow1(dict(_phi_T_linear(p, q)), k, q).items()))
    inv = _pow1(dict(_inv_one_plus_pY(p, q)), -k, q)
    return tuple(sorted((e + p * k, c) for e, c in inv.items()))


@lru_cache(maxsize=None)
def _psi_T_mono(p: int, q: int, m: int) -> tuple:
    if m >= 0:
        res: dict[int, int] = {}
        for e in range(0, m + 1, p):
            c = comb(m, e) * (-1) ** (m - e)
            f = e // p
            for i in range(f + 1):
                res[i] = (res.get(i, 0) + c * comb(f, i)) % q
        return tuple(sorted((e, c) for e, c in res.items() if c))
    k = -m
    kp = -(-k // p)
    # T^-k = phi(T^-kp) * (1 + pY)^kp * T^(p kp - k)
    inner = _pow1(dict(_one_plus_pY(p, q)), kp, q)
    res = {}
    for e, c in inner.items():
        for e2, c2 in _psi_T_mono(p, q, e + p * kp - k):
            res[e2 - kp] = (res.get(e2 - kp, 0) + c * c2) % q
    return tuple(sorted((e, c) for e, c in res.items() if c))


def _binomial_residue(x: int, k: int, q: int) -> int:
    return comb(x, k) % q if x >= 0 else ((-1) ** k * comb(-x + k - 1, k)) % q


@lru_cache(maxsize=None)
def _gamma_series(chi: int, q: int, deg: int) -> tuple:
    """(1+T)^chi - 1 up to degree ``deg`` (chi an integer representative)."""
    return tuple((k, c) for k in range(1, deg + 1) if (c := _binomial_residue(chi, k, q)))


@lru_cache(maxsize=None)
def _gamma_h_series(p: int, chi: int, q: int, deg: int) -> tuple:
    """h = T / ((1+T)^chi - 1) as a power series up to degree ``deg``."""
    g = [_binomial_residue(chi, k + 1, q) for k in range(deg + 1)]
    g0inv = pow(g[0], -1, q)
    H = [0] * (deg + 1)
    H[0] = g0inv
    for k in range(1, deg + 1):
        s = sum(g[j] * H[k - j] for j in range(1, k + 1))
        H[k] = (-s * g0inv) % q
    return tuple((j, c) for j, c in enumerate(H) if c)


@lru_cache(maxsize=None)
def _gamma_T_mono(p: int, chi: int, q: int, k: int, hi: float) -> tuple:
    """gamma(T^k) truncated above degree ``hi`` (hi = inf for exact polynomial images)."""
    if k >= 0:
        if chi > 0 and hi == INF:
            base = {j: c for j in range(1, chi + 1) if (c := comb(chi, j) % q)}
            return tuple(sorted(_pow1(base, k, q).items()))
        deg = int(hi)
        base = dict(_gamma_series(chi, q, max(deg, 1)))
        return tuple(sorted(_pow1(base, k, q, hi=deg).items()))
    # T^-k -> T^-k h^k
    n = -k
    top = int(hi) + n if hi != INF else None
    if top is None:
        raise BudgetExhausted("gamma of a negative power needs a truncation degree")
    h = dict(_gamma_h_series(p, chi, q, top))
    hk = _pow1(h, n, q, hi=top)
    return tuple(sorted((e - n, c) for e, c in hk.items()))


# ---------------------------------------------------------------------------
# Laurent element <-> integer polynomials


@dataclass
class _IntForm:
    shift: int  # valuation pulled out
    prec: int  # absolute precision of the original coefficients
    M: int  # working modulus exponent
    components: list  # one _IntPoly per basis element of the coefficient ring


def _scalars(c) -> Sequence[PadicScalar]:
    return c.coeffs if isinstance(c, CoeffElement) else (c,)


def _to_int_form(f: LaurentElement) -> _IntForm:
    p = f.p
    deg = f.ring.degree
    prec = f.ring.N
    vmin = 0
    for c in f.terms.values():
        for s in _scalars(c):
            prec = min(prec, s.N)
            if not s.is_zero():
                vmin = min(vmin, int(s.v))
    M = prec - vmin
    q = p**M if M > 0 else 1
    comps: list[dict] = [{} for _ in range(deg)]
    if M > 0:
        for e, c in f.terms.items():
            for i, s in enumerate(_scalars(c)):
                if s.is_zero():
                    continue
                val = s.u * p ** (int(s.v) - vmin) % q
                if val:
                    comps[i][e] = val
    return _IntForm(vmin, prec, M, comps)


def _from_int_form(f: LaurentElement, form: _IntForm, comps: list, prec: int | None = None) -> dict:
    p = f.p
    prec = form.prec if prec is None else prec
    ring = f.ring
    if ring.is_field_qp:
        make = PadicScalar.from_scaled_int
        return {e: make(p, c, form.shift, prec) for e, c in comps[0].items()}
    keys = set()
    for comp in comps:
        keys.update(comp)
    out = {}
    for e in keys:
        parts = [PadicScalar.from_scaled_int(p, comp.get(e, 0), form.shift, prec) for comp in comps]
        if ring.is_field_qp:
            out[e] = parts[0]
        else:
            out[e] = CoeffElement(ring, tuple(parts))
    return out


def _apply_mono(poly: dict, alpha: int, image: Callable[[int], Iterable[tuple[int, int]]], q: int) -> dict:
    out: dict[tuple, int] = {}
    for e, c in poly.items():
        for j, a in image(e[alpha]):
            e2 = e[:alpha] + (j,) + e[alpha + 1 :]
            out[e2] = (out.get(e2, 0) + c * a) % q
    return {e: c for e, c in out.items() if c}


def _transform(f: LaurentElement, alpha: int, image_factory, prec_override: Callable[[int], int] | None = None):
    """Apply a monomial-image map in variable alpha to every coefficient component."""
    form = _to_int_form(f)
    if form.M <= 0:
        return {}, form
    M = form.M if prec_override is None else prec_override(form.M)
    q = f.p**M
    image = image_factory(q)
    comps = [_apply_mono({e: c % q for e, c in comp.items()}, alpha, image, q) for comp in form.components]
    form = _IntForm(form.shift, form.prec - (form.M - M), M, comps)
    return comps, form


def _support(terms: dict, alpha: int) -> tuple[int, int]:
    if not terms:
        return 0, 0
    xs = [e[alpha] for e in terms]
    return min(xs), max(xs)


def _set(tup: tuple, alpha: int, value) -> tuple:
    return tup[:alpha] + (value,) + tup[alpha + 1 :]


def _scaled_bound(b: float, factor: int) -> float:
    return b if b in (INF, -INF) else int(b) * factor


def _check_alpha(f: LaurentElement, alpha: int) -> None:
    if not 0 <= alpha < f.nvars:
        raise IndexError(f"variable index {alpha} out of range")


# ---------------------------------------------------------------------------
# Laurent-level operators


def phi_laurent(f: LaurentElement, alpha: int) -> LaurentElement:
    """phi_alpha on a Laurent element; the window grows so the image stays exact."""
    _check_alpha(f, alpha)
    p = f.p
    W = f.window
    lo, hi = W.lo[alpha], W.hi[alpha]
    klo, khi = f.known_lo[alpha], f.known_hi[alpha]
    if f.coords == "U":
        comps, form = _transform(f, alpha, lambda q: (lambda k: ((p * k, 1),)))
        window = Window(_set(W.lo, alpha, p * lo), _set(W.hi, alpha, p * hi))
        known_lo = _set(f.known_lo, alpha, _scaled_bound(klo, p))
        known_hi = _set(f.known_hi, alpha, _scaled_bound(khi, p))
    else:
        comps, form = _transform(f, alpha, lambda q: (lambda k: _phi_T_mono(p, q, k)))
        terms_lo = min((min(e[alpha] for e in c) for c in comps if c), default=0)
        window = Window(_set(W.lo, alpha, min(p * lo, terms_lo)), _set(W.hi, alpha, p * hi))
        known_hi = _set(f.known_hi, alpha, khi)
        known_lo = _set(f.known_lo, alpha, klo if klo == -INF else p * (int(klo) - 1) + 1)
    terms = _from_int_form(f, form, comps) if comps else {}
    return LaurentElement(f.ring, f.nvars, terms, window, f.coords, known_lo, known_hi)


def psi_laurent(f: LaurentElement, alpha: int) -> LaurentElement:
    """psi_alpha: keep U-exponents divisible by p, divide by p."""
    _check_alpha(f, alpha)
    p = f.p
    W = f.window
    lo, hi = W.lo[alpha], W.hi[alpha]
    klo, khi = f.known_lo[alpha], f.known_hi[alpha]
    if f.coords == "U":

        def image_u(q):
            return lambda k: ((k // p, 1),) if k % p == 0 else ()

        comps, form = _transform(f, alpha, image_u)
        window = Window(_set(W.lo, alpha, -(-lo // p)), _set(W.hi, alpha, hi // p))
        known_lo = _set(f.known_lo, alpha, klo if klo == -INF else -(-int(klo) // p))
        known_hi = _set(f.known_hi, alpha, khi if khi == INF else int(khi) // p)
    else:
        if klo != -INF or khi != INF:
            raise BudgetExhausted("psi in T-coordinates needs an element without uncertified tails")
        comps, form = _transform(f, alpha, lambda q: (lambda k: _psi_T_mono(p, q, k)))
        slo = min((min(e[alpha] for e in c) for c in comps if c), default=0)
        shi = max((max(e[alpha] for e in c) for c in comps if c), default=0)
        window = Window(_set(W.lo, alpha, min(-(-lo // p), slo, 0)), _set(W.hi, alpha, max(hi // p, shi, 0)))
        known_lo, known_hi = f.known_lo, f.known_hi
    terms = _from_int_form(f, form, comps) if comps else {}
    return LaurentElement(f.ring, f.nvars, terms, window, f.coords, known_lo, known_hi)


@dataclass(frozen=True)
class GammaElement:
    """gamma_alpha acting by (1 + T_alpha) -> (1 + T_alpha)**chi."""

    alpha: int
    chi: Any  # int or PadicScalar of valuation 0

    def __post_init__(self) -> None:
        if isinstance(self.chi, PadicScalar):
            if self.chi.valuation() != 0:
                raise ValueError("chi must be a p-adic unit")
        elif isinstance(self.chi, int):
            if self.chi == 0:
                raise ValueError("chi must be a unit")
        else:
            raise TypeError("chi must be an int or a PadicScalar")

    def is_integer(self) -> bool:
        return isinstance(self.chi, int)

    def to_json(self) -> dict:
        chi = self.chi if isinstance(self.chi, int) else self.chi.to_json()
        return {"kind": "gamma", "alpha": self.alpha, "chi": chi}


def _chi_representative(chi, p: int) -> tuple[int, float]:
    """Integer representative of chi and the precision to which it is known."""
    if isinstance(chi, int):
        if chi % p == 0:
            raise ValueError("chi must be a p-adic unit")
        return chi, INF
    return chi.residue(), chi.N


def gamma_laurent(f: LaurentElement, g: GammaElement) -> LaurentElement:
    """Gamma-action on a Laurent element.

    Integer chi > 0 is exact (the window grows).  Negative or p-adic chi
    produce power series that are truncated at the window top; the
    certified range is reported and the coefficient precision drops to what
    the binomial coefficients C(chi, k) support.
    """
    alpha = g.alpha
    _check_alpha(f, alpha)
    p = f.p
    W = f.window
    lo, hi = W.lo[alpha], W.hi[alpha]
    klo, khi = f.known_lo[alpha], f.known_hi[alpha]
    chi_int, chi_prec = _chi_representative(g.chi, p)
    if f.coords == "U" and g.is_integer():
        c = chi_int
        comps, form = _transform(f, alpha, lambda q: (lambda k: ((c * k, 1),)))
        a, b = sorted((c * lo, c * hi))
        window = Window(_set(W.lo, alpha, a), _set(W.hi, alpha, b))
        if c > 0:
            known_lo = _set(f.known_lo, alpha, _scaled_bound(klo, c))
            known_hi = _set(f.known_hi, alpha, _scaled_bound(khi, c))
        else:
            known_lo = _set(f.known_lo, alpha, -INF if khi == INF else int(khi) * c)
            known_hi = _set(f.known_hi, alpha, INF if klo == -INF else int(klo) * c)
        terms = _from_int_form(f, form, comps) if comps else {}
        return LaurentElement(f.ring, f.nvars, terms, window, "U", known_lo, known_hi)
    if f.coords == "U":
        f = change_coords(f, "T")
        W = f.window
        lo, hi = W.lo[alpha], W.hi[alpha]
        klo, khi = f.known_lo[alpha], f.known_hi[alpha]
    if klo != -INF:
        raise BudgetExhausted("gamma in T-coordinates cannot certify anything past an open lower tail")
    has_negative = any(e[alpha] < 0 for e in f.terms)
    exact = isinstance(g.chi, int) and chi_int > 0 and not has_negative
    if exact:
        new_hi = hi * chi_int if hi > 0 else hi
        trunc = INF
        prec_cut = None
    else:
        new_hi = hi
        trunc = hi
        if chi_prec != INF:
            # C(chi, k) is known modulo p^(chi_prec - v_p(k!)) for k <= hi + |lo|
            depth = max(hi, 1) + max(-lo, 0) + 1
            loss = _factorial_valuation(depth, p)
            budget = int(chi_prec) - loss

            def prec_cut(M, budget=budget):
                if budget < 1:
                    raise BudgetExhausted("p-adic chi is not known precisely enough for this window")
                return min(M, budget)

        else:
            prec_cut = None
    comps, form = _transform(f, alpha, lambda q: (lambda k: _gamma_T_mono(p, chi_int, q, k, trunc)), prec_cut)
    window = Window(W.lo, _set(W.hi, alpha, new_hi))
    known_hi = khi if khi != INF else INF
    if not exact:
        known_hi = min(known_hi, hi)
    known_hi_t = _set(f.known_hi, alpha, known_hi)
    terms = _from_int_form(f, form, comps) if comps else {}
    return LaurentElement(f.ring, f.nvars, terms, window, "T", f.known_lo, known_hi_t)


def _factorial_valuation(n: int, p: int) -> int:
    v, pk = 0, p
    while pk <= n:
        v += n // pk
        pk *= p
    return v


# ---------------------------------------------------------------------------
# Robba-level operators with interval routing


def phi_apply(alpha: int, x: RobbaElement) -> RobbaElement:
    """phi_alpha; the interval in alpha maps [s, r] -> [s/p, r/p].

    On a decorated variable at tower level n > 0 the level drops by one and
    the body is untouched.
    """
    p = x.p
    iv = x.interval.scale(alpha, Fraction(1, p))
    if x.tag.levels[alpha] > 0:
        levels = list(x.tag.levels)
        levels[alpha] -= 1
        return RobbaElement(x.body, iv, x.tag.with_levels(levels))
    return RobbaElement(phi_laurent(x.body, alpha), iv, x.tag)


def psi_apply(alpha: int, x: RobbaElement) -> RobbaElement:
    """psi_alpha; the interval in alpha maps [s, r] -> [p s, min(p r, r_cap)]."""
    p = x.p
    s, r = x.interval.s[alpha], x.interval.r[alpha]
    if s * p > r:
        raise IntervalError("psi needs s <= r/p")
    if x.tag.kinds[alpha] != "plain":
        raise DecorationError("psi is only defined on undecorated variables")
    cap = radius_cap(p)
    new_r = min(p * r, max(cap, p * s))
    iv = x.interval.replace(alpha, p * s, new_r)
    return RobbaElement(psi_laurent(x.body, alpha), iv, x.tag)


def gamma_apply(g: GammaElement, x: RobbaElement) -> RobbaElement:
    """Gamma-action; the interval is unchanged."""
    return RobbaElement(gamma_laurent(x.body, g), x.interval, x.tag)


# ---------------------------------------------------------------------------
# commutation validation


@dataclass(frozen=True)
class OperatorSpec:
    kind: str  # "phi" | "psi" | "gamma"
    alpha: int
    chi: Any = None

    def apply(self, f: LaurentElement) -> LaurentElement:
        if self.kind == "phi":
            return phi_laurent(f, self.alpha)
        if self.kind == "psi":
            return psi_laurent(f, self.alpha)
        if self.kind == "gamma":
            return gamma_laurent(f, GammaElement(self.alpha, self.chi))
        raise ValueError(f"unknown operator kind {self.kind!r}")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "alpha": self.alpha}
        if self.kind == "gamma":
            out["chi"] = self.chi if isinstance(self.chi, int) else self.chi.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict, p: int) -> "OperatorSpec":
        chi = data.get("chi")
        if isinstance(chi, dict):
            chi = PadicScalar.from_json(p, chi)
        return cls(data["kind"], int(data["alpha"]), chi)

    def __str__(self) -> str:
        extra = f",chi={self.chi}" if self.kind == "gamma" else ""
        return f"{self.kind}_{self.alpha}{extra}"


@dataclass
class CommutationReport:
    checked: int
    failures: list[tuple[str, str, int]]

    @property
    def passed(self) -> bool:
        return not self.failures


def check_commutation(ops: Sequence[OperatorSpec], samples: Sequence[LaurentElement]) -> CommutationReport:
    """Compare both composition orders for every pair of operators on every sample."""
    failures = []
    checked = 0
    for i, a in enumerate(ops):
        for b in ops[i + 1 :]:
            for idx, f in enumerate(samples):
                ab = a.apply(b.apply(f))
                ba = b.apply(a.apply(f))
                checked += 1
                if not ab.agrees_with(ba):
                    failures.append((str(a), str(b), idx))
    return CommutationReport(checked, failures)
