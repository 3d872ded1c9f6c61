"""Koszul complexes of phi/psi/gamma operators and their cohomology.

Cohomology is computed on an integral lattice model over ``Lam = Z/p^N``.
For a module whose matrices have entries in ``Z_p[[T_1..T_n]]`` and are
invertible there (the etale case), the sub-module ``T Lam[[T]]`` is stable
and ``phi - 1`` is bijective on it, so only pole parts matter.  Each
complex is then a finite box of monomials ``T^e`` per Koszul term:

* ``phi`` model: exponents in ``[-K, 0]`` (``[-K', 0]`` in a phi-slot with
  ``K' = pK + (p-1)(N-1)``), a genuine subcomplex;
* ``psi`` model: exponents in ``[-K, n-1]`` (``[-K, m-1]`` in a psi-slot
  with ``m = n // p - (N-1)``), a genuine subquotient.

Ranks over Q_p are read off the persistent image of the cohomology of a
small box in the cohomology of a larger box, counting cyclic summands of
full exponent N.  A dimension is reported only when it is unchanged
across the stability steps (window growth and precision growth).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from . import _kernels
from .operators import _gamma_T_mono, _phi_T_mono, _psi_T_mono
from .padic import PadicScalar
from .phigamma import PhiGammaModule
from .robba import DecorationError, IntervalError, IntervalVector, radius_cap

DEFAULT_COHOMOLOGY_PRECISION = 4
DEFAULT_WINDOW = 1


class OutsideLatticeModel(ValueError):
    """The module's matrices are not integral units over Z_p[[T]]."""


class ChainMapError(ValueError):
    pass


# ---------------------------------------------------------------------------
# integral lattice data


Poly = dict  # exponent tuple -> residue mod q


def _poly_mul(a: Poly, b: Poly, q: int, hi: Sequence[int] | None = None) -> Poly:
    out: dict[tuple, int] = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            if hi is not None and any(x > h for x, h in zip(e, hi)):
                continue
            out[e] = (out.get(e, 0) + c1 * c2) % q
    return {e: c for e, c in out.items() if c}


def _poly_add(a: Poly, b: Poly, q: int, sign: int = 1) -> Poly:
    out = dict(a)
    for e, c in b.items():
        out[e] = (out.get(e, 0) + sign * c) % q
    return {e: c for e, c in out.items() if c}


def _matpoly_mul(A, B, q, hi=None):
    n, m, k = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(k):
            acc: Poly = {}
            for t in range(m):
                if A[i][t] and B[t][j]:
                    acc = _poly_add(acc, _poly_mul(A[i][t], B[t][j], q, hi), q)
            row.append(acc)
        out.append(row)
    return out


def _inverse_mod(A: list[list[int]], p: int, q: int) -> list[list[int]]:
    n = len(A)
    M = [list(r) + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] % p), None)
        if piv is None:
            raise OutsideLatticeModel("matrix is not invertible over Z_p[[T]] (constant term singular mod p)")
        M[c], M[piv] = M[piv], M[c]
        inv = pow(M[c][c], -1, q)
        M[c] = [x * inv % q for x in M[c]]
        for r in range(n):
            if r != c and M[r][c]:
                f = M[r][c]
                M[r] = [(x - f * y) % q for x, y in zip(M[r], M[c])]
    return [row[n:] for row in M]


@dataclass
class LatticeData:
    """A module's matrices over Z/p^N in the regular representation of the coefficient ring."""

    p: int
    N: int
    nvars: int
    D: int
    deg: int
    chi: tuple[int, ...]
    phi: list  # per variable: D x D matrix of Poly
    gamma: list
    _phi_inv: dict = field(default_factory=dict)

    @property
    def q(self) -> int:
        return self.p**self.N

    def phi_inverse(self, alpha: int, hi: Sequence[int]) -> list:
        key = (alpha, tuple(hi))
        if key not in self._phi_inv:
            self._phi_inv[key] = _series_inverse(self.phi[alpha], self.p, self.q, hi)
        return self._phi_inv[key]


def _series_inverse(A, p: int, q: int, hi: Sequence[int]):
    D = len(A)
    zero = None
    const = [[0] * D for _ in range(D)]
    for i in range(D):
        for j in range(D):
            for e, c in A[i][j].items():
                if not any(e):
                    const[i][j] = c
                    zero = e
    if zero is None:
        zero = tuple(0 for _ in hi)
    C = _inverse_mod(const, p, q)
    Cpoly = [[({zero: C[i][j]} if C[i][j] else {}) for j in range(D)] for i in range(D)]
    # A = C^-1 (I - X) with X = I - C A, which has no constant term
    CA = _matpoly_mul(Cpoly, A, q, hi)
    X = [[_poly_add({zero: 1} if i == j else {}, CA[i][j], q, -1) for j in range(D)] for i in range(D)]
    total = [[({zero: 1} if i == j else {}) for j in range(D)] for i in range(D)]
    power = total
    for _ in range(sum(hi) + 1):
        power = _matpoly_mul(power, X, q, hi)
        if not any(power[i][j] for i in range(D) for j in range(D)):
            break
        total = [[_poly_add(total[i][j], power[i][j], q) for j in range(D)] for i in range(D)]
    return _matpoly_mul(total, Cpoly, q, hi)


def _chi_int(chi: Any, p: int, N: int) -> int:
    if isinstance(chi, int):
        return chi
    if chi.N < N + 6:
        raise OutsideLatticeModel("p-adic chi is not known precisely enough for the lattice model")
    return chi.residue()


def lattice_data(M: PhiGammaModule, N: int) -> LatticeData:
    p = M.p
    q = p**N
    deg = M.ring.degree
    D = M.rank * deg

    def convert(mat):
        out = [[{} for _ in range(D)] for _ in range(D)]
        for i, row in enumerate(mat):
            for j, x in enumerate(row):
                if not x.is_exact():
                    raise OutsideLatticeModel("matrix entries must be exact polynomials")
                for e, c in x.terms.items():
                    if any(v < 0 for v in e):
                        raise OutsideLatticeModel("matrix entries must lie in Z_p[[T]] (no negative powers)")
                    blocks = [[c.to_fraction()]] if isinstance(c, PadicScalar) else c.multiplication_matrix()
                    for a in range(deg):
                        for b in range(deg):
                            val = Fraction(blocks[a][b])
                            if val.denominator % p == 0:
                                raise OutsideLatticeModel("matrix entries must be p-integral")
                            res = val.numerator * pow(val.denominator, -1, q) % q
                            if res:
                                cell = out[i * deg + a][j * deg + b]
                                cell[e] = (cell.get(e, 0) + res) % q
        return out

    phi = [convert(m) for m in M.phi]
    gamma = [convert(m) for m in M.gamma]
    zero = (0,) * M.nvars
    for mats in (phi, gamma):
        for A in mats:
            const = [[A[i][j].get(zero, 0) for j in range(D)] for i in range(D)]
            _inverse_mod(const, p, q)  # raises when not a unit mod p
    chi = tuple(_chi_int(c, p, N) for c in M.chi)
    return LatticeData(p, N, M.nvars, D, deg, chi, phi, gamma)


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class WindowPlan:
    """Per-variable exponent boxes for the two slot types of one model."""

    model: str  # "phi" | "psi" | "gamma"
    slot0: tuple[tuple[int, int], ...]
    slot1: tuple[tuple[int, int], ...]

    def box(self, in_slot1: Sequence[bool]) -> tuple[tuple[int, int], ...]:
        return tuple(b if s else a for a, b, s in zip(self.slot0, self.slot1, in_slot1))


def _log_steps(x: Fraction, p: int) -> int:
    """Least j >= 0 with x * p^j >= radius cap."""
    cap = radius_cap(p)
    j = 0
    while x * p**j < cap:
        j += 1
    return j


def _pole_window(r: Fraction, p: int, W: int) -> int:
    return W + 2 + _log_steps(r, p)


def window_plan(model: str, interval: IntervalVector, p: int, N: int, W: int) -> WindowPlan:
    """Boxes derived from the interval: smaller radii give wider boxes."""
    slot0, slot1 = [], []
    for s, r in zip(interval.s, interval.r):
        K = _pole_window(r, p, W)
        if model in ("phi", "gamma"):
            Kp = p * K + (p - 1) * (N - 1)
            slot0.append((-K, 0))
            slot1.append((-Kp, 0) if model == "phi" else (-K, 0))
        elif model == "psi":
            m = W + 3 + _log_steps(p * s, p)
            n = p * (m + N - 1)
            slot0.append((-K, n - 1))
            slot1.append((-K, m - 1))
        else:
            raise ValueError(f"unknown model {model!r}")
    return WindowPlan(model, tuple(slot0), tuple(slot1))


def enlarged_plan(plan: WindowPlan, p: int, N: int) -> WindowPlan:
    """Target boxes for the persistent image: poles grow by p, psi tops shrink by 2p."""
    slot0, slot1 = [], []
    for (lo0, hi0), (lo1, hi1) in zip(plan.slot0, plan.slot1):
        K = -lo0 * p
        if plan.model == "phi":
            slot0.append((-K, 0))
            slot1.append((-(p * K + (p - 1) * (N - 1)), 0))
        elif plan.model == "gamma":
            slot0.append((-K, 0))
            slot1.append((-K, 0))
        else:
            n = hi0 + 1 - 2 * p
            m = n // p - (N - 1)
            if m < 1:
                raise ValueError("psi window too small to enlarge")
            slot0.append((-K, n - 1))
            slot1.append((-K, m - 1))
    return WindowPlan(plan.model, tuple(slot0), tuple(slot1))


# ---------------------------------------------------------------------------
# complexes


@dataclass(frozen=True)
class ComplexOp:
    kind: str  # "phi" | "psi" | "gamma"
    alpha: int

    def __str__(self) -> str:
        return f"{self.kind}_{self.alpha + 1}"


@dataclass(frozen=True)
class ComplexTerm:
    subset: tuple[int, ...]
    degree: int
    box: tuple[tuple[int, int], ...]
    rank: int
    interval: IntervalVector | None

    @property
    def size(self) -> int:
        return self.rank * math.prod(hi - lo + 1 for lo, hi in self.box)


class ChainComplex:
    """Koszul complex of commuting operators on a module's lattice model.

    Terms are indexed by subsets of ``ops`` (ordered outer family first);
    the differential on a term S adds an operator o with sign
    ``(-1)^#{s in S : s < o}`` and acts by ``o - restriction``.
    """

    def __init__(
        self,
        module: PhiGammaModule,
        ops: Sequence[ComplexOp],
        window: int = DEFAULT_WINDOW,
        precision: int = DEFAULT_COHOMOLOGY_PRECISION,
        plan: WindowPlan | None = None,
        data: LatticeData | None = None,
    ):
        kinds = {o.kind for o in ops}
        if "phi" in kinds and "psi" in kinds:
            raise ValueError("a complex uses phi or psi, not both")
        self.module = module
        self.ops = tuple(ops)
        self.window = window
        self.precision = precision
        self.model = "phi" if "phi" in kinds else "psi" if "psi" in kinds else "gamma"
        p = module.p
        if self.model in ("phi", "psi") and not module.interval.admissible(p):
            raise IntervalError("complexes need s_alpha <= r_alpha / p")
        if self.model == "psi" and not module.tag.is_plain():
            raise DecorationError("psi is only defined on undecorated variables")
        self.plan = plan or window_plan(self.model, module.interval, p, precision, window)
        self._data = data

    # construction helpers ---------------------------------------------------
    def at(self, window: int | None = None, precision: int | None = None, plan: WindowPlan | None = None) -> "ChainComplex":
        w = self.window if window is None else window
        n = self.precision if precision is None else precision
        data = self._data if n == self.precision else None
        return ChainComplex(self.module, self.ops, w, n, plan, data)

    def enlarged(self) -> "ChainComplex":
        return self.at(plan=enlarged_plan(self.plan, self.module.p, self.precision))

    @property
    def data(self) -> LatticeData:
        if self._data is None:
            self._data = lattice_data(self.module, self.precision)
        return self._data

    @property
    def p(self) -> int:
        return self.module.p

    @property
    def q(self) -> int:
        return self.module.p**self.precision

    @property
    def length(self) -> int:
        return len(self.ops)

    def _slot_flags(self, subset: Sequence[int]) -> tuple[bool, ...]:
        flags = [False] * self.module.nvars
        for i in subset:
            o = self.ops[i]
            if o.kind in ("phi", "psi"):
                flags[o.alpha] = True
        return tuple(flags)

    def term_interval(self, subset: Sequence[int]) -> IntervalVector:
        iv = self.module.interval
        p = self.p
        for a, flag in enumerate(self._slot_flags(subset)):
            if not flag:
                continue
            s, r = iv.s[a], iv.r[a]
            iv = iv.replace(a, s, r / p) if self.model == "phi" else iv.replace(a, p * s, r)
        return iv

    @cached_property
    def terms(self) -> list[list[ComplexTerm]]:
        D = self.module.rank * self.module.ring.degree
        out = []
        for k in range(self.length + 1):
            row = []
            for S in itertools.combinations(range(self.length), k):
                box = self.plan.box(self._slot_flags(S))
                row.append(ComplexTerm(S, k, box, D, self.term_interval(S) if self.model != "gamma" else self.module.interval))
            out.append(row)
        return out

    def term_count(self, k: int) -> int:
        return len(self.terms[k])

    def basis(self, term: ComplexTerm) -> dict[tuple[int, tuple[int, ...]], int]:
        ranges = [range(lo, hi + 1) for lo, hi in term.box]
        return {(i, e): n for n, (e, i) in enumerate(itertools.product(itertools.product(*ranges), range(term.rank)))}

    # operator blocks ---------------------------------------------------------
    def _image(self, op: ComplexOp, j: int, e: tuple[int, ...], dst_box) -> dict[tuple[int, tuple], int]:
        """Coordinates of op(e_j T^e) as {(row, exponent): residue}, truncated to dst_box."""
        d = self.data
        p, q, a = d.p, d.q, op.alpha
        hi = tuple(h for _, h in dst_box)
        out: dict[tuple[int, tuple], int] = {}
        if op.kind == "psi":
            src_hi = tuple(max(h, x) for (_, h), x in zip(dst_box, e))
            bound = [h - min(x, 0) for h, x in zip(src_hi, e)]
            bound[a] = max(bound[a], p * (hi[a] + 1) + (p - 1) * (self.precision + 1) - min(e[a], 0))
            inv = d.phi_inverse(a, tuple(bound))
            for i in range(d.D):
                for shift, c in inv[i][j].items():
                    f = tuple(x + y for x, y in zip(e, shift))
                    if any(f[b] > hi[b] for b in range(len(f)) if b != a):
                        continue
                    for k, c2 in _psi_T_mono(p, q, f[a]):
                        if k > hi[a]:
                            continue
                        g = f[:a] + (k,) + f[a + 1 :]
                        out[(i, g)] = (out.get((i, g), 0) + c * c2) % q
        else:
            if op.kind == "phi":
                images = _phi_T_mono(p, q, e[a])
                mat = d.phi[a]
            else:
                images = _gamma_T_mono(p, d.chi[a], q, e[a], hi[a])
                mat = d.gamma[a]
            for k, c in images:
                if k > hi[a]:
                    continue
                f = e[:a] + (k,) + e[a + 1 :]
                for i in range(d.D):
                    for shift, c2 in mat[i][j].items():
                        g = tuple(x + y for x, y in zip(f, shift))
                        if any(x > h for x, h in zip(g, hi)):
                            continue
                        out[(i, g)] = (out.get((i, g), 0) + c * c2) % q
        lo = tuple(l for l, _ in dst_box)
        for (_, g), c in out.items():
            if c and any(x < l for x, l in zip(g, lo)):
                raise AssertionError(f"{op} leaves the window below: {g} vs {lo}")
        return out

    def operator_block(self, op: ComplexOp, src: ComplexTerm, dst: ComplexTerm) -> np.ndarray:
        """Matrix of (op - restriction) from src to dst."""
        q = self.q
        sb, db = self.basis(src), self.basis(dst)
        A = np.zeros((len(db), len(sb)), dtype=np.int64 if q < _kernels.INT64_MODULUS_LIMIT else object)
        for (j, e), col in sb.items():
            for key, c in self._image(op, j, e, dst.box).items():
                A[db[key], col] = (A[db[key], col] + c) % q
            if (j, e) in db:
                A[db[(j, e)], col] = (A[db[(j, e)], col] - 1) % q
            elif any(x < l for x, (l, _) in zip(e, dst.box)):
                raise AssertionError("restriction would drop a pole")
        return A

    @cached_property
    def _differentials(self) -> list[np.ndarray]:
        out = []
        q = self.q
        for k in range(self.length):
            src_terms, dst_terms = self.terms[k], self.terms[k + 1]
            rows = sum(t.size for t in dst_terms)
            cols = sum(t.size for t in src_terms)
            A = np.zeros((rows, cols), dtype=np.int64 if q < _kernels.INT64_MODULUS_LIMIT else object)
            dst_pos = {t.subset: i for i, t in enumerate(dst_terms)}
            row_off = np.cumsum([0] + [t.size for t in dst_terms])
            col_off = np.cumsum([0] + [t.size for t in src_terms])
            for ci, src in enumerate(src_terms):
                for o in range(self.length):
                    if o in src.subset:
                        continue
                    tgt = tuple(sorted(src.subset + (o,)))
                    ri = dst_pos[tgt]
                    sign = -1 if sum(1 for s in src.subset if s < o) % 2 else 1
                    block = self.operator_block(self.ops[o], src, dst_terms[ri])
                    r0, c0 = row_off[ri], col_off[ci]
                    A[r0 : r0 + block.shape[0], c0 : c0 + block.shape[1]] = (sign * block) % q
            out.append(A)
        return out

    def differential(self, k: int) -> np.ndarray:
        """Matrix from degree k to degree k + 1."""
        return self._differentials[k]

    def degree_size(self, k: int) -> int:
        if k < 0 or k > self.length:
            return 0
        return sum(t.size for t in self.terms[k])

    def d_squared_defect(self) -> list[int]:
        """Number of nonzero entries of d^(k+1) d^k per degree (all zero for a complex)."""
        out = []
        for k in range(self.length - 1):
            prod = _kernels.matmul_mod(self.differential(k + 1), self.differential(k), self.q)
            out.append(int(np.count_nonzero(prod)))
        return out

    def d_squared_zero(self) -> bool:
        return not any(self.d_squared_defect())

    def describe(self) -> dict:
        return {
            "ops": [str(o) for o in self.ops],
            "terms": [
                [{"subset": [str(self.ops[i]) for i in t.subset], "box": [list(b) for b in t.box], "interval": t.interval.to_json() if t.interval else None} for t in row]
                for row in self.terms
            ],
        }


def _ops(kind: str, n: int) -> list[ComplexOp]:
    return [ComplexOp(kind, a) for a in range(n)]


def build_phi_complex(M: PhiGammaModule, window: int = DEFAULT_WINDOW, precision: int = DEFAULT_COHOMOLOGY_PRECISION) -> ChainComplex:
    return ChainComplex(M, _ops("phi", M.nvars), window, precision)


def build_psi_complex(M: PhiGammaModule, window: int = DEFAULT_WINDOW, precision: int = DEFAULT_COHOMOLOGY_PRECISION) -> ChainComplex:
    return ChainComplex(M, _ops("psi", M.nvars), window, precision)


def build_gamma_complex(M: PhiGammaModule, window: int = DEFAULT_WINDOW, precision: int = DEFAULT_COHOMOLOGY_PRECISION) -> ChainComplex:
    return ChainComplex(M, _ops("gamma", M.nvars), window, precision)


def totalize(outer: ChainComplex, inner: ChainComplex) -> ChainComplex:
    """Total complex of two Koszul complexes on the same module (outer family first)."""
    if outer.module is not inner.module:
        raise ValueError("both complexes must be built on the same module")
    failures = outer.module.check_invariants()
    if failures:
        raise ValueError(f"operator families do not commute on the module: {failures[0]}")
    return ChainComplex(outer.module, outer.ops + inner.ops, outer.window, outer.precision)


def build_phi_gamma_complex(M: PhiGammaModule, window: int = DEFAULT_WINDOW, precision: int = DEFAULT_COHOMOLOGY_PRECISION) -> ChainComplex:
    return totalize(build_phi_complex(M, window, precision), build_gamma_complex(M, window, precision))


def build_psi_gamma_complex(M: PhiGammaModule, window: int = DEFAULT_WINDOW, precision: int = DEFAULT_COHOMOLOGY_PRECISION) -> ChainComplex:
    return totalize(build_psi_complex(M, window, precision), build_gamma_complex(M, window, precision))


# ---------------------------------------------------------------------------
# cohomology


def _label_map(src: ChainComplex, dst: ChainComplex, k: int) -> np.ndarray:
    """Chain map between two boxes of the same complex: keep labels present in the target."""
    q = src.q
    rows = dst.degree_size(k)
    cols = src.degree_size(k)
    A = np.zeros((rows, cols), dtype=np.int64 if q < _kernels.INT64_MODULUS_LIMIT else object)
    roff = 0
    dst_off = {}
    for t in dst.terms[k]:
        dst_off[t.subset] = (roff, dst.basis(t), t.box)
        roff += t.size
    coff = 0
    for t in src.terms[k]:
        r0, db, box = dst_off[t.subset]
        for key, c in src.basis(t).items():
            if key in db:
                A[r0 + db[key], coff + c] = 1
            elif any(x < lo for x, (lo, _) in zip(key[1], box)):
                raise AssertionError("target box lost a pole")
        coff += t.size
    return A


def persistence_threshold(N: int) -> int:
    return N


def persistent_rank(small: ChainComplex, big: ChainComplex, k: int) -> int:
    """Number of full-exponent cyclic summands in image(H^k(small) -> H^k(big))."""
    p, N = small.p, small.precision
    q = p**N
    n_small = small.degree_size(k)
    if n_small == 0:
        return 0
    if k < small.length:
        Z = _kernels.kernel_basis(small.differential(k), p, N)
    else:
        Z = _kernels.as_matrix(np.eye(n_small, dtype=np.int64), q)
    if Z.size == 0:
        return 0
    Zb = _kernels.matmul_mod(_label_map(small, big, k), Z, q)
    if k > 0:
        B = big.differential(k - 1)
    else:
        B = np.zeros((big.degree_size(0), 0), dtype=Zb.dtype)
    t = persistence_threshold(N)

    def length_with(power: int) -> int:
        gens = Zb * (p**power) % q
        return _kernels.span_length(np.hstack([gens, B]) if B.size else gens, p, N)

    return length_with(t - 1) - length_with(t)


@dataclass
class DegreeRecord:
    degree: int
    dim: int | None
    stable: bool
    window: list[int]
    precision: list[int]
    history: list[int]

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "dim": self.dim,
            "stable": self.stable,
            "window": self.window,
            "precision": self.precision,
            "history": self.history,
        }


@dataclass
class CohomologyResult:
    records: list[DegreeRecord]
    method: str

    @property
    def dims(self) -> tuple[int | None, ...]:
        return tuple(r.dim for r in self.records)

    @property
    def stable(self) -> bool:
        return all(r.stable for r in self.records)

    def to_json(self) -> dict:
        return {"method": self.method, "dims": list(self.dims), "stable": self.stable, "records": [r.to_json() for r in self.records]}


def stability_schedule(window: int, precision: int, steps: int) -> list[tuple[int, int]]:
    """Base run plus ``steps`` enlargements alternating window and precision growth."""
    out = [(window, precision)]
    for j in range(1, steps + 1):
        out.append((window + j, precision + 2 * (j // 2)))
    return out


def raw_dims(C: ChainComplex) -> list[int]:
    big = C.enlarged()
    deg = C.module.ring.degree
    out = []
    for k in range(C.length + 1):
        r = persistent_rank(C, big, k)
        out.append(r // deg if r % deg == 0 else r)
    return out


def _factor_rank1(M: PhiGammaModule) -> list[PhiGammaModule] | None:
    """Split a constant rank-1 module into one-variable modules, or None."""
    from .phigamma import rank1_constructor

    if M.rank != 1 or not M.is_constant():
        return None
    zero = (0,) * M.nvars
    out = []
    for a in range(M.nvars):
        iv = IntervalVector((M.interval.s[a],), (M.interval.r[a],))
        c = M.phi[a][0][0].coeff(zero)
        d = M.gamma[a][0][0].coeff(zero)
        out.append(rank1_constructor([c], [d], iv, M.ring, [M.chi[a]]))
    return out


def convolve(dims_list: Sequence[Sequence[int | None]]) -> tuple[int | None, ...]:
    """Graded convolution of dimension vectors (None propagates)."""
    out: list[int | None] = [1]
    for dims in dims_list:
        new: list[int | None] = [0] * (len(out) + len(dims) - 1)
        for i, a in enumerate(out):
            for j, b in enumerate(dims):
                if new[i + j] is None:
                    continue
                if a is None or b is None:
                    if (a or 0) != 0 or (b or 0) != 0 or a is None and b is None:
                        new[i + j] = None
                    continue
                new[i + j] += a * b
        out = new
    return tuple(out)


def cohomology_dims(
    C: ChainComplex,
    window: int | None = None,
    precision: int | None = None,
    stability_steps: int = 2,
    method: str = "auto",
) -> CohomologyResult:
    """Stable cohomology dimensions of a phi/psi (+ gamma) complex.

    ``method``: ``direct`` builds the full complex; ``kunneth`` convolves
    one-variable runs (constant rank-1 modules only); ``auto`` uses direct
    for one variable and Kunneth when the module splits.
    """
    W = C.window if window is None else window
    N = C.precision if precision is None else precision
    M = C.module
    if M.rank == 0:
        return CohomologyResult([DegreeRecord(k, 0, True, [W], [N], [0]) for k in range(C.length + 1)], "direct")
    if method == "auto":
        method = "direct" if M.nvars == 1 or _factor_rank1(M) is None else "kunneth"
    if method == "kunneth":
        parts = _factor_rank1(M)
        if parts is None:
            raise ValueError("Kunneth route needs a constant rank-1 module")
        kinds = sorted({o.kind for o in C.ops})
        per_var = []
        for part in parts:
            ops = [ComplexOp(k, 0) for k in ("phi", "psi", "gamma") if k in kinds]
            sub = ChainComplex(part, ops, W, N)
            per_var.append(cohomology_dims(sub, W, N, stability_steps, "direct"))
        dims = convolve([r.dims for r in per_var])
        stable = all(r.stable for r in per_var)
        schedule = stability_schedule(W, N, stability_steps)
        recs = [
            DegreeRecord(k, d if stable else None, stable and d is not None, [w for w, _ in schedule], [n for _, n in schedule], [])
            for k, d in enumerate(dims)
        ]
        return CohomologyResult(recs, "kunneth")
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    schedule = stability_schedule(W, N, stability_steps)
    history = [raw_dims(C.at(w, n)) for w, n in schedule]
    recs = []
    for k in range(C.length + 1):
        vals = [h[k] for h in history]
        stable = len(set(vals)) == 1
        recs.append(DegreeRecord(k, vals[0] if stable else None, stable, [w for w, _ in schedule], [n for _, n in schedule], vals))
    return CohomologyResult(recs, "direct")


# ---------------------------------------------------------------------------
# phi -> psi comparison


@dataclass
class ChainMap:
    source: ChainComplex
    target: ChainComplex
    components: list[np.ndarray]

    def defects(self) -> list[int]:
        """Nonzero entries of f^(k+1) d_source - d_target f^k per degree."""
        q = self.source.q
        out = []
        for k in range(self.source.length):
            lhs = _kernels.matmul_mod(self.components[k + 1], self.source.differential(k), q)
            rhs = _kernels.matmul_mod(self.target.differential(k), self.components[k], q)
            out.append(int(np.count_nonzero((lhs - rhs) % q)))
        return out

    def validates(self) -> bool:
        return not any(self.defects())


def phi_to_psi_morphism(M: PhiGammaModule, window: int = DEFAULT_WINDOW, precision: int = DEFAULT_COHOMOLOGY_PRECISION) -> ChainMap:
    """Chain map C(phi, Gamma) -> C(psi, Gamma): identity off phi-slots, -psi_alpha on each phi-slot.

    Both sides use two-sided boxes with a common top so that the
    comparison is an honest map of subquotients.
    """
    p, N = M.p, precision
    psi_plan = window_plan("psi", M.interval, p, N, window)
    phi0, phi1 = [], []
    psi0, psi1 = [], []
    for (lo, hi), (_, hi1) in zip(psi_plan.slot0, psi_plan.slot1):
        K = -lo
        Kp = p * K + (p - 1) * (N - 1)
        phi0.append((-K, hi))
        phi1.append((-Kp, hi))
        Kpsi = K + N
        psi0.append((-Kpsi, hi))
        psi1.append((-Kpsi, hi1))
    phi_plan = WindowPlan("phi", tuple(phi0), tuple(phi1))
    psi_plan = WindowPlan("psi", tuple(psi0), tuple(psi1))
    src = ChainComplex(M, _ops("phi", M.nvars) + _ops("gamma", M.nvars), window, N, phi_plan)
    tgt = ChainComplex(M, _ops("psi", M.nvars) + _ops("gamma", M.nvars), window, N, psi_plan, src.data)
    q = src.q
    comps = []
    for k in range(src.length + 1):
        rows, cols = tgt.degree_size(k), src.degree_size(k)
        A = np.zeros((rows, cols), dtype=np.int64 if q < _kernels.INT64_MODULUS_LIMIT else object)
        toff, tbases = {}, {}
        off = 0
        for t in tgt.terms[k]:
            toff[t.subset] = off
            tbases[t.subset] = (t, tgt.basis(t))
            off += t.size
        coff = 0
        for t in src.terms[k]:
            tt, db = tbases[t.subset]
            slots = [src.ops[i].alpha for i in t.subset if src.ops[i].kind == "phi"]
            for (j, e), c in src.basis(t).items():
                vec = {(j, e): 1}
                box = list(t.box)
                for a in slots:
                    box[a] = tt.box[a]
                    nxt: dict = {}
                    for (jj, ee), val in vec.items():
                        for key, c2 in tgt._image(ComplexOp("psi", a), jj, ee, tuple(box)).items():
                            nxt[key] = (nxt.get(key, 0) - val * c2) % q
                    vec = nxt
                for key, val in vec.items():
                    if val:
                        A[toff[t.subset] + db[key], coff + c] = (A[toff[t.subset] + db[key], coff + c] + val) % q
            coff += t.size
        comps.append(A)
    return ChainMap(src, tgt, comps)
