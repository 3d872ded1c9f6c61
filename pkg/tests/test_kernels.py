import numpy as np
import pytest

from robbakit import _kernels
from robbakit.corpus import rank1_corpus
from robbakit.koszul import build_phi_gamma_complex, cohomology_dims


def random_matrix(rng, p, N, shape):
    # mix units with p-divisible entries so pivots of every valuation show up
    A = rng.integers(0, p**N, size=shape)
    return A * p ** rng.integers(0, N + 1, size=shape) % p**N


def both(monkeypatch, fn):
    out = {}
    for name in ("numba", "numpy"):
        monkeypatch.setenv("ROBBAKIT_BACKEND", name)
        out[name] = fn()
    return out["numba"], out["numpy"]


@pytest.mark.parametrize("p,N", [(2, 9), (3, 4), (5, 6), (3, 40)])
def test_backends_agree(monkeypatch, p, N):
    rng = np.random.default_rng(p * 100 + N)
    for _ in range(10):
        A = random_matrix(rng, p, min(N, 12), tuple(rng.integers(1, 12, size=2)))
        B = random_matrix(rng, p, min(N, 12), (A.shape[1], int(rng.integers(1, 8))))
        a, b = both(monkeypatch, lambda: sorted(_kernels.pivot_valuations(A, p, N)))
        assert a == b
        a, b = both(monkeypatch, lambda: _kernels.matmul_mod(A, B, p**N))
        assert np.array_equal(np.asarray(a), np.asarray(b))
        a, b = both(monkeypatch, lambda: _kernels.kernel_basis(A, p, N))
        for K in (a, b):
            prod = _kernels.matmul_mod(A, K, p**N) if len(K) else np.zeros(0)
            assert not np.any(np.asarray(prod) % p**N)
        assert _kernels.span_length(a, p, N) == _kernels.span_length(b, p, N)


def test_unknown_backend(monkeypatch):
    monkeypatch.setenv("ROBBAKIT_BACKEND", "fortran")
    with pytest.raises(ValueError):
        _kernels.backend()


def test_cohomology_independent_of_backend(monkeypatch):
    M = rank1_corpus(3)[0]
    a, b = both(monkeypatch, lambda: cohomology_dims(build_phi_gamma_complex(M)).dims)
    assert a == b == (1, 2, 0)
