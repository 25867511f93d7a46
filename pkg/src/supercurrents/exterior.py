"""Bigraded exterior algebra over dx_1..dx_n, dxi_1..dxi_n.

A :class:`Superform` stores its terms in canonical order: all ``dx`` generators
first, then all ``dxi`` generators, each block strictly increasing.  The key of
a term is the pair ``(K, L)`` of 1-based index tuples.  Coefficients may be
plain numbers (int, Fraction, float), numpy arrays (pointwise evaluated forms)
or :class:`~supercurrents.fields.ScalarField` objects; anything that supports
``+``, ``-`` and ``*`` works.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterable, Tuple

import numpy as np

__all__ = [
    "Superform",
    "wedge",
    "apply_J",
    "is_symmetric",
    "beta_power",
    "canonicalize",
    "volume_sign",
    "dx",
    "dxi",
    "beta",
    "power",
    "wedge_all",
    "DimensionError",
]

Key = Tuple[Tuple[int, ...], Tuple[int, ...]]


class DimensionError(ValueError):
    pass


def _is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    if isinstance(c, float):
        return c == 0.0
    if isinstance(c, np.ndarray):
        return False
    is_zero = getattr(c, "is_zero", None)
    if callable(is_zero):
        return bool(is_zero())
    return False


def _merge_sign(a: Tuple[int, ...], b: Tuple[int, ...]):
    """Sign of sorting the concatenation a+b (both increasing); None on repeats."""
    inversions = 0
    for x in a:
        for y in b:
            if x == y:
                return None
            if x > y:
                inversions += 1
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def _basis_product(k1, l1, k2, l2):
    # dx_k1 dxi_l1 dx_k2 dxi_l2 -> dx_k1 dx_k2 dxi_l1 dxi_l2
    sign = -1 if (len(l1) * len(k2)) % 2 else 1
    sk = _merge_sign(k1, k2)
    if sk is None:
        return None
    sl = _merge_sign(l1, l2)
    if sl is None:
        return None
    return sign * sk * sl, tuple(sorted(k1 + k2)), tuple(sorted(l1 + l2))


def _permutation_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def canonicalize(word: Iterable[Tuple[str, int]]):
    """Canonicalize a word of generators.

    ``word`` is a sequence like ``[("xi", 2), ("x", 1)]``.  Returns
    ``(sign, K, L)`` or ``(0, None, None)`` when a generator repeats.
    """
    word = list(word)
    seen = set()
    for g in word:
        if g in seen:
            return 0, None, None
        seen.add(g)
    # rank: all dx before all dxi, increasing inside each block
    ranks = [(0 if kind == "x" else 1, i) for kind, i in word]
    sign = _permutation_sign(ranks)
    K = tuple(sorted(i for kind, i in word if kind == "x"))
    L = tuple(sorted(i for kind, i in word if kind != "x"))
    return sign, K, L


def volume_sign(n: int) -> int:
    """Sign relating dx_1..dx_n dxi_1..dxi_n to beta^n / n!."""
    return -1 if (n * (n - 1) // 2) % 2 else 1


class Superform:
    """Element of bidegree (p, q) of the superform algebra on R^n x R^n."""

    __slots__ = ("n", "p", "q", "terms")

    def __init__(self, n: int, p: int, q: int, terms: Dict[Key, object] | None = None):
        if n < 1:
            raise DimensionError("dimension must be positive")
        self.n, self.p, self.q = n, p, q
        self.terms: Dict[Key, object] = {}
        for (K, L), c in (terms or {}).items():
            K, L = tuple(K), tuple(L)
            if len(K) != p or len(L) != q:
                raise ValueError(f"term {K},{L} does not have bidegree ({p},{q})")
            for idx in (K, L):
                if any(i < 1 or i > n for i in idx):
                    raise ValueError(f"index out of range 1..{n}: {idx}")
                if list(idx) != sorted(set(idx)):
                    raise ValueError(f"multi-index must be strictly increasing: {idx}")
            if not _is_zero(c):
                self.terms[(K, L)] = c

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, n, p, q):
        return cls(n, p, q)

    @classmethod
    def scalar(cls, n, c):
        return cls(n, 0, 0, {((), ()): c})

    @classmethod
    def from_word(cls, n, word, coeff=1):
        """Form ``coeff * g_1 ^ g_2 ^ ...`` for a word of ("x"|"xi", i) pairs."""
        sign, K, L = canonicalize(word)
        p = sum(1 for kind, _ in word if kind == "x")
        q = len(word) - p
        if sign == 0:
            return cls(n, p, q)
        return cls(n, p, q, {(K, L): coeff if sign > 0 else -coeff})

    @classmethod
    def from_matrix(cls, n, A):
        """The (1,1)-form sum_ij A[i][j] dx_i ^ dxi_j (0-based matrix input)."""
        terms = {}
        for i in range(n):
            for j in range(n):
                terms[((i + 1,), (j + 1,))] = A[i][j]
        return cls(n, 1, 1, terms)

    @classmethod
    def volume(cls, n, density=1):
        """``density * beta^n / n!`` in canonical order."""
        full = tuple(range(1, n + 1))
        c = density if volume_sign(n) > 0 else -density
        return cls(n, n, n, {(full, full): c})

    # -- basic protocol -----------------------------------------------
    @property
    def bidegree(self):
        return (self.p, self.q)

    def is_zero(self) -> bool:
        return not self.terms

    def __iter__(self):
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def __getitem__(self, key):
        K, L = key
        return self.terms.get((tuple(K), tuple(L)), 0)

    def _check_compatible(self, other):
        if not isinstance(other, Superform):
            return NotImplemented
        if other.n != self.n:
            raise DimensionError(f"dimension mismatch {self.n} != {other.n}")
        if other.bidegree != self.bidegree:
            raise ValueError(f"bidegree mismatch {self.bidegree} != {other.bidegree}")
        return True

    def __add__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms[k] + c if k in terms else c
        return Superform(self.n, self.p, self.q, terms)

    def __neg__(self):
        return Superform(self.n, self.p, self.q, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        """Multiply every coefficient by a scalar (number, array or field)."""
        return Superform(self.n, self.p, self.q, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, c):
        if isinstance(c, Superform):
            return NotImplemented
        return self.scale(c)

    def __rmul__(self, c):
        return self.scale(c)

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Superform):
            return NotImplemented
        if (self.n, self.p, self.q) != (other.n, other.p, other.q):
            return False
        keys = set(self.terms) | set(other.terms)
        for k in keys:
            d = self[k] - other[k]
            if isinstance(d, np.ndarray):
                if np.any(d != 0):
                    return False
            elif not _is_zero(d):
                return False
        return True

    __hash__ = None

    def map_coefficients(self, fn):
        return Superform(self.n, self.p, self.q, {k: fn(c) for k, c in self.terms.items()})

    def evaluate(self, x):
        """Evaluate every coefficient at ``x`` (a point or an (N, n) array)."""

        def ev(c):
            if callable(getattr(c, "evaluate", None)):
                return c.evaluate(x)
            return c

        return self.map_coefficients(ev)

    def density(self):
        """Coefficient of an (n, n)-form relative to vol = beta^n / n!."""
        if (self.p, self.q) != (self.n, self.n):
            raise ValueError(f"density needs bidegree ({self.n},{self.n}), got {self.bidegree}")
        full = tuple(range(1, self.n + 1))
        c = self.terms.get((full, full), 0)
        return c if volume_sign(self.n) > 0 else -c

    def matrix(self):
        """Coefficient matrix of a (1,1)-form as a nested list (0-based)."""
        if self.bidegree != (1, 1):
            raise ValueError("matrix() needs a (1,1)-form")
        return [[self[((i + 1,), (j + 1,))] for j in range(self.n)] for i in range(self.n)]

    def to_text(self) -> str:
        lines = []
        for (K, L), c in sorted(self.terms.items()):
            ks = ",".join(map(str, K))
            ls = ",".join(map(str, L))
            lines.append(f"({_coeff_text(c)}) * dx[{ks}] ^ dxi[{ls}]")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, n: int, text: str, parse_coeff=None):
        """Inverse of :meth:`to_text`.  ``parse_coeff`` maps a string to a coefficient."""
        if parse_coeff is None:
            from .fields import parse_field

            parse_coeff = lambda s: parse_field(s, n)  # noqa: E731
        form = None
        for raw in text.strip().splitlines():
            raw = raw.strip()
            if not raw:
                continue
            m = _TERM_RE.match(raw)
            if m is None:
                raise ValueError(f"cannot parse superform term: {raw!r}")
            coeff = parse_coeff(m.group(1).strip())
            K = tuple(int(t) for t in m.group(2).split(",") if t.strip())
            L = tuple(int(t) for t in m.group(3).split(",") if t.strip())
            word = [("x", i) for i in K] + [("xi", j) for j in L]
            term = cls.from_word(n, word, coeff)
            form = term if form is None else form + term
        if form is None:
            raise ValueError("empty superform text")
        return form

    def __repr__(self):
        if not self.terms:
            return f"Superform(n={self.n}, ({self.p},{self.q}), 0)"
        body = " + ".join(
            f"({_coeff_text(c)})*dx{list(K)}^dxi{list(L)}" for (K, L), c in sorted(self.terms.items())
        )
        return f"Superform(n={self.n}, ({self.p},{self.q}), {body})"


_TERM_RE = re.compile(r"^(.*)\*\s*dx\[([\d,\s]*)\]\s*\^\s*dxi\[([\d,\s]*)\]\s*$")


def _coeff_text(c) -> str:
    if isinstance(c, np.ndarray):
        return np.array2string(c, threshold=4)
    return str(c)


def dx(n: int, i: int, coeff=1) -> Superform:
    return Superform(n, 1, 0, {((i,), ()): coeff})


def dxi(n: int, i: int, coeff=1) -> Superform:
    return Superform(n, 0, 1, {((), (i,)): coeff})


def wedge(a: Superform, b: Superform) -> Superform:
    """Exterior product; all 2n generators anticommute."""
    if a.n != b.n:
        raise DimensionError(f"dimension mismatch {a.n} != {b.n}")
    n = a.n
    p, q = a.p + b.p, a.q + b.q
    if p > n or q > n:
        return Superform(n, p, q)
    terms: Dict[Key, object] = {}
    for (k1, l1), c1 in a.terms.items():
        for (k2, l2), c2 in b.terms.items():
            prod = _basis_product(k1, l1, k2, l2)
            if prod is None:
                continue
            sign, K, L = prod
            c = c1 * c2
            if sign < 0:
                c = -c
            key = (K, L)
            terms[key] = terms[key] + c if key in terms else c
    return Superform(n, p, q, terms)


def wedge_all(*forms: Superform) -> Superform:
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def power(a: Superform, k: int) -> Superform:
    """k-th wedge power; k = 0 gives the scalar 1."""
    out = Superform.scalar(a.n, 1)
    for _ in range(k):
        out = wedge(out, a)
    return out


def apply_J(a: Superform) -> Superform:
    """J(sum a_KL dx_K dxi_L) = (-1)^q sum a_KL dxi_K dx_L."""
    sign = -1 if (a.q + a.p * a.q) % 2 else 1
    terms = {(L, K): (c if sign > 0 else -c) for (K, L), c in a.terms.items()}
    return Superform(a.n, a.q, a.p, terms)


def is_symmetric(a: Superform) -> bool:
    if a.p != a.q:
        raise ValueError(f"symmetry is defined for (p,p)-forms, got {a.bidegree}")
    for (K, L), c in a.terms.items():
        other = a[(L, K)]
        if isinstance(c, (float, np.floating, np.ndarray)) or isinstance(other, (float, np.floating, np.ndarray)):
            # float coefficients come from sums taken in different orders
            if not np.allclose(c, other, rtol=1e-12, atol=1e-14):
                return False
            continue
        if not _is_zero(c - other):
            return False
    return True


def beta_power(n: int, p: int) -> Superform:
    """beta^p with exact integer coefficients; zero form when p > n."""
    if p < 0:
        raise ValueError("p must be nonnegative")
    if p > n:
        return Superform(n, p, p)
    terms = {}
    fact = math.factorial(p)
    for S in combinations(range(1, n + 1), p):
        word = []
        for i in S:
            word += [("x", i), ("xi", i)]
        sign, K, L = canonicalize(word)
        terms[(K, L)] = sign * fact
    return Superform(n, p, p, terms)


def beta(n: int) -> Superform:
    return beta_power(n, 1)
