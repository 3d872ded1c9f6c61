"""Counting oracle for rank-1 monomial gluing data.

For ``g = t^w`` the map ``(x, y) -> x - g y`` sends every basis monomial to
a single monomial, so its rank is the number of distinct target monomials
hit.  No linear algebra is involved.
"""

from __future__ import annotations

import itertools


def monomial_glue_dims(k: tuple[int, ...], m: tuple[int, ...], w: tuple[int, ...]) -> tuple[int, int]:
    n = len(k)
    zero = (0,) * n
    top = tuple(ka - 1 + max(wa, 0) for ka, wa in zip(k, w))
    target = set(itertools.product(*[range(-ma, ta + 1) for ma, ta in zip(m, top)]))
    window = itertools.product(*[range(-ma, ka) for ma, ka in zip(m, k)])
    polar = {zero} | {e for e in window if min(e) < 0}
    skeleton = list(itertools.product(*[range(ka) for ka in k]))
    hit = set(polar)
    for s in skeleton:
        e = tuple(a + b for a, b in zip(s, w))
        assert e in target
        hit.add(e)
    ncols = len(polar) + len(skeleton)
    return ncols - len(hit), len(target) - len(hit)
