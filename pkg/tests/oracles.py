"""Independent reference computations used by the tests.

Nothing here imports dglakit: the point is to have a second route to each
number.  Arithmetic uses fractions.Fraction, symbolic work uses sympy.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb


def fraction_rank(rows: list[dict]) -> int:
    """Rank of sparse rows by plain Gaussian elimination."""
    pivots: dict = {}
    r = 0
    for row in rows:
        v = {k: Fraction(c) for k, c in row.items() if c}
        while v:
            k = min(v)
            if k not in pivots:
                c = v[k]
                pivots[k] = {kk: cc / c for kk, cc in v.items()}
                r += 1
                break
            p = pivots[k]
            c = v[k]
            for kk, cc in p.items():
                nv = v.get(kk, 0) - c * cc
                if nv:
                    v[kk] = nv
                else:
                    v.pop(kk, None)
    return r


def _graded_commutator(u: dict, du: int, v: dict, dv: int) -> dict:
    out: dict = {}
    sign = -1 if (du * dv) % 2 else 1
    for a, x in u.items():
        for b, y in v.items():
            out[a + b] = out.get(a + b, 0) + x * y
            out[b + a] = out.get(b + a, 0) - sign * x * y
    return {k: c for k, c in out.items() if c}


def _right_normed(word: tuple, degrees: list) -> dict:
    v = {(word[-1],): 1}
    d = degrees[word[-1]]
    for g in reversed(word[:-1]):
        v = _graded_commutator({(g,): 1}, degrees[g], v, d)
        d += degrees[g]
        if not v:
            break
    return v


def free_lie_dim_bruteforce(degrees: list[int], target: int) -> int:
    """dim of the free graded Lie algebra in one degree, from ranks in T(V).

    Right-normed brackets of all words span; brackets preserve the content
    (multiset of letters), so ranks are taken per content.
    """
    n = len(degrees)
    total = 0
    for content in _contents(degrees, target):
        letters = [g for g in range(n) for _ in range(content[g])]
        words = set(itertools.permutations(letters))
        total += fraction_rank([_right_normed(w, degrees) for w in sorted(words)])
    return total


def _contents(degrees: list[int], target: int):
    n = len(degrees)

    def rec(i, rest, acc):
        if i == n:
            if rest == 0 and any(acc):
                yield tuple(acc)
            return
        d = degrees[i]
        k = 0
        while k * d >= rest if d < 0 else False:
            yield from rec(i + 1, rest - k * d, acc + [k])
            k += 1
    yield from rec(0, target, [])


def free_lie_dims_pbw(degree_counts: dict[int, int], depth: int) -> dict[int, int]:
    """Dims of the free graded Lie algebra in degrees -1..-depth from the PBW identity.

    U(L) = T(V), and the character of U(L) is a product of bosonic factors
    1/(1-t^k)^a for even k and fermionic factors (1+t^k)^b for odd k.
    Work with power series in s = t^-1.
    """
    tv = [Fraction(0)] * (depth + 1)
    tv[0] = Fraction(1)
    for m in range(1, depth + 1):
        tv[m] = sum(degree_counts.get(-j, 0) * tv[m - j] for j in range(1, m + 1))
    dims: dict[int, int] = {}
    for m in range(1, depth + 1):
        prod = [Fraction(0)] * (depth + 1)
        prod[0] = Fraction(1)
        for j, a in dims.items():
            if not a:
                continue
            prod = _mul_series(prod, _factor(j, a, depth), depth)
        # the new factor contributes +a s^m (bosonic or fermionic alike at first order)
        dims[m] = int(tv[m] - prod[m])
    return {-m: a for m, a in dims.items()}


def _factor(j: int, a: int, depth: int) -> list:
    out = [Fraction(0)] * (depth + 1)
    if j % 2:
        for i in range(0, a + 1):
            if i * j > depth:
                break
            out[i * j] = Fraction(comb(a, i))
    else:
        for i in range(0, depth // j + 1):
            out[i * j] = Fraction(comb(a + i - 1, i))
    return out


def _mul_series(a: list, b: list, depth: int) -> list:
    out = [Fraction(0)] * (depth + 1)
    for i, x in enumerate(a):
        if x:
            for j in range(0, depth + 1 - i):
                out[i + j] += x * b[j]
    return out
