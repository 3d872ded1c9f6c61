"""Valuation-pivoted elimination over Z/p^N.

Two interchangeable backends compute the same thing:

* ``numba``: ``@njit`` loops over int64 arrays (used when p**N fits, see
  :data:`INT64_MODULUS_LIMIT`);
* ``numpy``: vectorized rank-one updates, on int64 or on object arrays of
  Python ints for large moduli.

``ROBBAKIT_BACKEND=numpy`` forces the fallback; by default numba is used
whenever it imports.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly by whichever backend is active
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

# entries are < q and products must fit in int64
INT64_MODULUS_LIMIT = 3_000_000_000


def backend() -> str:
    """Name of the backend selected by the environment."""
    choice = os.environ.get("ROBBAKIT_BACKEND", "numba").strip().lower()
    if choice not in ("numba", "numpy"):
        raise ValueError(f"ROBBAKIT_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numba" and not HAVE_NUMBA:
        return "numpy"
    return choice


def _use_int64(q: int) -> bool:
    return q < INT64_MODULUS_LIMIT


def as_matrix(A, q: int) -> np.ndarray:
    """Reduce ``A`` modulo q into int64 (small q) or object (large q) storage."""
    if _use_int64(q):
        return np.mod(np.asarray(A, dtype=np.int64), q)
    arr = np.array(A, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    return arr % q


# ---------------------------------------------------------------------------
# numba kernels


def _valuation_py(x, p, N):
    if x == 0:
        return N
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _inverse_py(a, m):
    # extended Euclid; a is a unit mod m
    t, new_t = 0, 1
    r, new_r = m, a % m
    while new_r != 0:
        quo = r // new_r
        t, new_t = new_t, t - quo * new_t
        r, new_r = new_r, r - quo * new_r
    return t % m


def _mulmod_py(a, b, q):
    return (a * b) % q


if HAVE_NUMBA:
    _valuation_nb = njit(cache=True)(_valuation_py)
    _inverse_nb = njit(cache=True)(_inverse_py)

    @njit(cache=True)
    def _pivot_valuations_nb(M, p, N, q):  # pragma: no cover - compiled
        rows, cols = M.shape
        row_free = np.ones(rows, dtype=np.bool_)
        col_free = np.ones(cols, dtype=np.bool_)
        out = np.empty(min(rows, cols), dtype=np.int64)
        count = 0
        while True:
            best_v = N
            bi = -1
            bj = -1
            for i in range(rows):
                if not row_free[i]:
                    continue
                for j in range(cols):
                    if col_free[j] and M[i, j] != 0:
                        v = _valuation_nb(M[i, j], p, N)
                        if v < best_v:
                            best_v = v
                            bi = i
                            bj = j
                            if v == 0:
                                break
                if best_v == 0:
                    break
            if bi < 0:
                break
            pv = p**best_v
            uinv = _inverse_nb(M[bi, bj] // pv, q)
            for k in range(rows):
                if k == bi or not row_free[k] or M[k, bj] == 0:
                    continue
                f = ((M[k, bj] // pv) % q) * uinv % q
                for j in range(cols):
                    if col_free[j] and M[bi, j] != 0:
                        M[k, j] = (M[k, j] - f * M[bi, j]) % q
            row_free[bi] = False
            col_free[bj] = False
            out[count] = best_v
            count += 1
        return out[:count]

    @njit(cache=True)
    def _column_reduce_nb(M, p, N, q):  # pragma: no cover - compiled
        rows, cols = M.shape
        V = np.zeros((cols, cols), dtype=np.int64)
        for j in range(cols):
            V[j, j] = 1
        row_free = np.ones(rows, dtype=np.bool_)
        col_free = np.ones(cols, dtype=np.bool_)
        piv_col = np.empty(min(rows, cols), dtype=np.int64)
        piv_val = np.empty(min(rows, cols), dtype=np.int64)
        count = 0
        while True:
            best_v = N
            bi = -1
            bj = -1
            for i in range(rows):
                if not row_free[i]:
                    continue
                for j in range(cols):
                    if col_free[j] and M[i, j] != 0:
                        v = _valuation_nb(M[i, j], p, N)
                        if v < best_v:
                            best_v = v
                            bi = i
                            bj = j
                            if v == 0:
                                break
                if best_v == 0:
                    break
            if bi < 0:
                break
            pv = p**best_v
            uinv = _inverse_nb(M[bi, bj] // pv, q)
            for l in range(cols):
                if l == bj or not col_free[l] or M[bi, l] == 0:
                    continue
                f = ((M[bi, l] // pv) % q) * uinv % q
                for k in range(rows):
                    if M[k, bj] != 0:
                        M[k, l] = (M[k, l] - f * M[k, bj]) % q
                for k in range(cols):
                    if V[k, bj] != 0:
                        V[k, l] = (V[k, l] - f * V[k, bj]) % q
            # row operations leave the kernel unchanged; only column bj moves
            for k in range(rows):
                if k != bi:
                    M[k, bj] = 0
            row_free[bi] = False
            col_free[bj] = False
            piv_col[count] = bj
            piv_val[count] = best_v
            count += 1
        return piv_col[:count], piv_val[:count], V, col_free

    @njit(cache=True)
    def _matmul_mod_nb(A, B, q):  # pragma: no cover - compiled
        n, m = A.shape
        k = B.shape[1]
        out = np.zeros((n, k), dtype=np.int64)
        for i in range(n):
            for t in range(m):
                a = A[i, t]
                if a == 0:
                    continue
                for j in range(k):
                    if B[t, j] != 0:
                        out[i, j] = (out[i, j] + a * B[t, j]) % q
        return out


# ---------------------------------------------------------------------------
# numpy fallback


def _vals_array(x: np.ndarray, p: int, N: int) -> np.ndarray:
    out = np.full(x.shape, N, dtype=np.int64)
    nz = x != 0
    y = x[nz].copy()
    v = np.zeros(y.shape, dtype=np.int64)
    for _ in range(N):
        div = (y % p) == 0
        if not div.any():
            break
        y[div] //= p
        v[div] += 1
    out[nz] = v
    return out


def _best_pivot(M: np.ndarray, rows: np.ndarray, cols: np.ndarray, p: int, N: int):
    if not rows.size or not cols.size:
        return None
    sub = M[np.ix_(rows, cols)]
    if not np.any(sub != 0):
        return None
    vals = _vals_array(sub, p, N)
    flat = int(np.argmin(vals))
    i, j = divmod(flat, sub.shape[1])
    return int(vals[i, j]), int(rows[i]), int(cols[j])


def _pivot_valuations_np(M: np.ndarray, p: int, N: int, q: int) -> np.ndarray:
    rows = np.arange(M.shape[0])
    cols = np.arange(M.shape[1])
    out = []
    while True:
        best = _best_pivot(M, rows, cols, p, N)
        if best is None:
            break
        v, bi, bj = best
        pv = p**v
        uinv = pow(int(M[bi, bj]) // pv, -1, q)
        others = rows[(rows != bi)]
        others = others[M[others, bj] != 0]
        if others.size:
            f = ((M[others, bj] // pv) % q) * uinv % q
            M[np.ix_(others, cols)] = (M[np.ix_(others, cols)] - f[:, None] * M[bi, cols][None, :]) % q
        rows = rows[rows != bi]
        cols = cols[cols != bj]
        out.append(v)
    return np.array(out, dtype=np.int64)


def _column_reduce_np(M: np.ndarray, p: int, N: int, q: int):
    rows_n, cols_n = M.shape
    V = np.eye(cols_n, dtype=M.dtype) if M.dtype != object else np.array(np.eye(cols_n, dtype=np.int64), dtype=object)
    rows = np.arange(rows_n)
    cols = np.arange(cols_n)
    piv_col, piv_val = [], []
    while True:
        best = _best_pivot(M, rows, cols, p, N)
        if best is None:
            break
        v, bi, bj = best
        pv = p**v
        uinv = pow(int(M[bi, bj]) // pv, -1, q)
        others = cols[(cols != bj)]
        others = others[M[bi, others] != 0]
        if others.size:
            f = ((M[bi, others] // pv) % q) * uinv % q
            M[:, others] = (M[:, others] - M[:, [bj]] * f[None, :]) % q
            V[:, others] = (V[:, others] - V[:, [bj]] * f[None, :]) % q
        keep = M[bi, bj]
        M[:, bj] = 0
        M[bi, bj] = keep
        rows = rows[rows != bi]
        cols = cols[cols != bj]
        piv_col.append(bj)
        piv_val.append(v)
    col_free = np.zeros(cols_n, dtype=bool)
    col_free[cols] = True
    return np.array(piv_col, dtype=np.int64), np.array(piv_val, dtype=np.int64), V, col_free


# ---------------------------------------------------------------------------
# public entry points


def pivot_valuations(A, p: int, N: int) -> list[int]:
    """Valuations of the Smith invariants of the column span of A over Z/p^N."""
    q = p**N
    M = as_matrix(A, q)
    if M.size == 0:
        return []
    if backend() == "numba" and M.dtype == np.int64:
        vals = _pivot_valuations_nb(M.copy(), p, N, q)
    else:
        vals = _pivot_valuations_np(M.copy(), p, N, q)
    return sorted(int(v) for v in vals)


def span_length(A, p: int, N: int) -> int:
    """Length (as a Z_p-module) of the submodule of (Z/p^N)^rows spanned by the columns."""
    return sum(N - v for v in pivot_valuations(A, p, N))


def kernel_basis(A, p: int, N: int) -> np.ndarray:
    """Generators (as columns) of the kernel of A : (Z/p^N)^cols -> (Z/p^N)^rows."""
    q = p**N
    M = as_matrix(A, q)
    cols = M.shape[1] if M.ndim == 2 else 0
    if cols == 0:
        return np.zeros((0, 0), dtype=M.dtype)
    if M.shape[0] == 0:
        return as_matrix(np.eye(cols, dtype=np.int64), q)
    if backend() == "numba" and M.dtype == np.int64:
        piv_col, piv_val, V, col_free = _column_reduce_nb(M.copy(), p, N, q)
    else:
        piv_col, piv_val, V, col_free = _column_reduce_np(M.copy(), p, N, q)
    gens = [V[:, j] for j in np.nonzero(col_free)[0]]
    for j, v in zip(piv_col, piv_val):
        if v > 0:
            gens.append(V[:, j] * p ** (N - int(v)) % q)
    if not gens:
        return np.zeros((cols, 0), dtype=M.dtype)
    return np.stack(gens, axis=1)


def matmul_mod(A, B, q: int) -> np.ndarray:
    A = as_matrix(A, q)
    B = as_matrix(B, q)
    if A.shape[1] != B.shape[0]:
        raise ValueError("shape mismatch")
    if A.size == 0 or B.size == 0:
        return np.zeros((A.shape[0], B.shape[1]), dtype=A.dtype)
    if backend() == "numba" and A.dtype == np.int64 and B.dtype == np.int64:
        return _matmul_mod_nb(A, B, q)
    if A.dtype == np.int64 and q * q * A.shape[1] >= 2**63:
        A = A.astype(object)
        B = B.astype(object)
        return (A.dot(B) % q).astype(np.int64)
    return A.dot(B) % q
