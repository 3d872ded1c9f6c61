"""Brute-force truncated-rank oracle for rank-1 Herr complexes in one variable.

Deliberately shares no code with the package: plain Python integers, dict
series and a hand-rolled Smith-form elimination.  The module is
``Z_p[[T]]`` twisted by constants: phi acts as ``c * phi`` and gamma as
``d * gamma``.  Only the pole part ``Z/p^N[T^-1]`` carries cohomology, so
the complex is

    C0 = <T^0..T^-K>  ->  C1 = <T^0..T^-K'> (+) <T^0..T^-K>  ->  C2 = <T^0..T^-K'>

with ``d0 = (c phi - 1, d gamma - 1)`` and ``d1 = (d gamma - 1) - (c phi - 1)``.
Dimensions are the number of full-exponent cyclic summands in the image
of the small-window cohomology inside the large-window cohomology.
"""

from __future__ import annotations

from math import comb


def _vp(x: int, p: int, N: int) -> int:
    x %= p**N
    if x == 0:
        return N
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _mul(a: dict, b: dict, lo: int, hi: int, q: int) -> dict:
    out: dict = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = e1 + e2
            if lo <= e <= hi:
                out[e] = (out.get(e, 0) + c1 * c2) % q
    return {e: c for e, c in out.items() if c}


class HerrOracle:
    def __init__(self, p: int, N: int, chi: int, c: int = 1, d: int = 1):
        self.p, self.N, self.chi = p, N, chi
        self.q = p**N
        self.c, self.d = c % self.q, d % self.q

    # operator images of T^-k, truncated to degrees <= 0 ------------------
    def _phi_inverse_T(self, floor: int) -> dict:
        # 1/phi(T) = T^-p (1 + x)^-1 with x = sum_{0<j<p} C(p, j) T^(j-p)
        p, q = self.p, self.q
        x = {j - p: comb(p, j) % q for j in range(1, p)}
        total, term = {0: 1}, {0: 1}
        for _ in range(self.N + 2):
            term = _mul(term, x, floor, 0, q)
            term = {e: (-c) % q for e, c in term.items()}
            for e, c in term.items():
                total[e] = (total.get(e, 0) + c) % q
        return {e - p: c for e, c in total.items() if c and e - p >= floor}

    def _gamma_inverse_T(self, length: int) -> dict:
        # 1/gamma(T) = T^-1 * h with h = T / ((1+T)^chi - 1)
        q, chi = self.q, self.chi
        g = [comb(chi, k + 1) % q for k in range(chi)]
        g0 = pow(g[0], -1, q)
        H = [0] * length
        H[0] = g0
        for k in range(1, length):
            s = sum(g[j] * H[k - j] for j in range(1, min(k, len(g) - 1) + 1))
            H[k] = (-s * g0) % q
        return {j - 1: H[j] for j in range(length) if H[j]}

    def _phi_image(self, k: int, floor: int) -> dict:
        base = self._phi_inverse_T(floor)
        out = {0: 1}
        for _ in range(k):
            out = _mul(out, base, floor, 0, self.q)
        return {e: c * self.c % self.q for e, c in out.items()}

    def _gamma_image(self, k: int) -> dict:
        base = self._gamma_inverse_T(2 * k + 4)
        out = {0: 1}
        for _ in range(k):
            out = _mul(out, base, -k, k, self.q)
        return {e: c * self.d % self.q for e, c in out.items() if e <= 0}

    def _op_minus_one(self, image, ks: int, kd: int) -> list[list[int]]:
        M = [[0] * (ks + 1) for _ in range(kd + 1)]
        for k in range(ks + 1):
            for e, c in image(k).items():
                assert -e <= kd
                M[-e][k] = (M[-e][k] + c) % self.q
            if k <= kd:
                M[k][k] = (M[k][k] - 1) % self.q
        return M

    def complex(self, K: int):
        p, N = self.p, self.N
        Kp = p * K + (p - 1) * (N - 1)
        floor = -(p * Kp + (p - 1) * N + 5)
        Phi = self._op_minus_one(lambda k: self._phi_image(k, floor), K, Kp)
        G = self._op_minus_one(self._gamma_image, K, K)
        Gp = self._op_minus_one(self._gamma_image, Kp, Kp)
        d0 = Phi + G
        d1 = [Gp[i] + [(-Phi[i][j]) % self.q for j in range(K + 1)] for i in range(Kp + 1)]
        return d0, d1, Kp

    # linear algebra over Z/p^N -------------------------------------------
    def pivots(self, A: list[list[int]]) -> list[int]:
        p, N, q = self.p, self.N, self.q
        A = [[x % q for x in r] for r in A]
        if not A or not A[0]:
            return []
        rows, cols = list(range(len(A))), list(range(len(A[0])))
        vals = []
        while True:
            best = None
            for i in rows:
                for j in cols:
                    if A[i][j]:
                        v = _vp(A[i][j], p, N)
                        if best is None or v < best[0]:
                            best = (v, i, j)
            if best is None:
                return vals
            v, i, j = best
            vals.append(v)
            ui = pow(A[i][j] // p**v, -1, q)
            for k in rows:
                if k != i and A[k][j]:
                    f = (A[k][j] // p**v) * ui % q
                    A[k] = [(a - f * b) % q for a, b in zip(A[k], A[i])]
            rows.remove(i)
            cols.remove(j)

    def kernel(self, A: list[list[int]], ncols: int) -> list[list[int]]:
        p, N, q = self.p, self.N, self.q
        M = [[x % q for x in r] for r in A]
        V = [[int(i == j) for j in range(ncols)] for i in range(ncols)]
        rows, cols, piv = list(range(len(M))), list(range(ncols)), []
        while True:
            best = None
            for i in rows:
                for j in cols:
                    if M[i][j]:
                        v = _vp(M[i][j], p, N)
                        if best is None or v < best[0]:
                            best = (v, i, j)
            if best is None:
                break
            v, i, j = best
            ui = pow(M[i][j] // p**v, -1, q)
            for l in cols:
                if l != j and M[i][l]:
                    f = (M[i][l] // p**v) * ui % q
                    for k in range(len(M)):
                        M[k][l] = (M[k][l] - f * M[k][j]) % q
                    for k in range(ncols):
                        V[k][l] = (V[k][l] - f * V[k][j]) % q
            for k in rows:
                if k != i and M[k][j]:
                    f = (M[k][j] // p**v) * ui % q
                    M[k] = [(a - f * b) % q for a, b in zip(M[k], M[i])]
            piv.append((j, v))
            rows.remove(i)
            cols.remove(j)
        gens = [[V[k][j] for k in range(ncols)] for j in cols]
        gens += [[V[k][j] * p ** (N - v) % q for k in range(ncols)] for j, v in piv if v > 0]
        return gens

    def length(self, gens: list[list[int]]) -> int:
        return sum(self.N - v for v in self.pivots(gens)) if gens else 0

    def full_summands(self, sub: list[list[int]], base: list[list[int]]) -> int:
        """Cyclic summands of exponent N in (span(sub) + span(base)) / span(base)."""
        p, N, q = self.p, self.N, self.q
        top = [[x * p ** (N - 1) % q for x in g] for g in sub]
        return self.length(top + base) - self.length(base)

    # cohomology -------------------------------------------------------------
    def dims(self, K: int, L: int) -> tuple[int, int, int]:
        d0s, d1s, Ks = self.complex(K)
        d0, d1, Kl = self.complex(L)
        Z0 = self.kernel(d0s, K + 1)
        Z0 = [v + [0] * (L - K) for v in Z0]
        h0 = self.full_summands(Z0, [])
        Z1 = self.kernel(d1s, Ks + 1 + K + 1)
        Z1 = [v[: Ks + 1] + [0] * (Kl - Ks) + v[Ks + 1 :] + [0] * (L - K) for v in Z1]
        B1 = [list(col) for col in zip(*d0)]
        h1 = self.full_summands(Z1, B1)
        C2 = [[int(i == k) for i in range(Kl + 1)] for k in range(Ks + 1)]
        B2 = [list(col) for col in zip(*d1)]
        h2 = self.full_summands(C2, B2)
        return h0, h1, h2

    def d_squared_zero(self, K: int) -> bool:
        d0, d1, _ = self.complex(K)
        return all(sum(d1[i][k] * d0[k][j] for k in range(len(d0))) % self.q == 0 for i in range(len(d1)) for j in range(K + 1))


def stable_dims(p: int, N: int, chi: int, c: int = 1, d: int = 1, windows=((3, 9), (4, 12), (5, 15))) -> tuple[int, int, int] | None:
    """Dims if unchanged across all window pairs (small K, large L), else None."""
    runs = {HerrOracle(p, N, chi, c, d).dims(K, L) for K, L in windows}
    return runs.pop() if len(runs) == 1 else None


def kunneth(a, b) -> tuple[int, ...]:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return tuple(out)
