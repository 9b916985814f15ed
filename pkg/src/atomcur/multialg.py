"""Pointwise graded multilinear algebra over a finite-dimensional fiber.

Words (tuples of 0-based indices) index tensor-algebra basis elements;
strictly increasing tuples ("anti-indices") index exterior-algebra basis
elements.  Coefficient maps are plain dictionaries from keys to scalars,
with absent keys meaning zero.  The key order used everywhere (and in
particular for the PBW basis) is graded-lexicographic: sort by length,
then lexicographically.

Deshuffle coproducts, the determinant pairing, and the Hodge star with
signature live here; everything is a pure function of immutable values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction


# ---------------------------------------------------------------------------
# Words, subsets, signs.

def check_word(w, n: int):
    if any(not (0 <= i < n) for i in w):
        raise ValueError(f"word {w!r} has letters outside 0..{n - 1}")
    return tuple(w)


def check_anti_index(K, d: int):
    K = tuple(K)
    if any(not (0 <= i < d) for i in K):
        raise ValueError(f"anti-index {K!r} outside 0..{d - 1}")
    if any(K[i] >= K[i + 1] for i in range(len(K) - 1)):
        raise ValueError(f"anti-index {K!r} is not strictly increasing")
    return K


def word_multidegree(w, n: int) -> tuple:
    """Multi-index <w> counting occurrences of each letter."""
    out = [0] * n
    for i in w:
        out[i] += 1
    return tuple(out)


def sorted_word(T) -> tuple:
    """The nondecreasing word with multidegree T (0-based letters)."""
    out = []
    for i, t in enumerate(T):
        out.extend([i] * t)
    return tuple(out)


def gradlex_key(key):
    """Sort key: by length first, then lexicographic."""
    return (len(key), key)


def sort_sign(seq) -> int:
    """Sign of the permutation sorting ``seq``; 0 on repeated entries."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] == seq[j]:
                return 0
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def merge_sign(A, B) -> int:
    """Koszul sign merging disjoint increasing tuples A and B; 0 if they meet."""
    return sort_sign(tuple(A) + tuple(B))


def wedge_merge(A, B):
    """(sign, sorted union) of two increasing tuples, or (0, ()) if they meet."""
    s = merge_sign(A, B)
    if s == 0:
        return 0, ()
    return s, tuple(sorted(A + B))


# ---------------------------------------------------------------------------
# Coproducts.

def tensor_coproduct(w):
    """Deshuffle coproduct of a word: all order-preserving splits.

    Returns a list of (left, right) word pairs; each subset of positions
    contributes once, so a length-m word yields 2^m summands (with unit
    coefficient).  Order is fixed by the position-subset bitmask.
    """
    w = tuple(w)
    m = len(w)
    out = []
    for mask in range(1 << m):
        left = tuple(w[i] for i in range(m) if mask >> i & 1)
        right = tuple(w[i] for i in range(m) if not mask >> i & 1)
        out.append((left, right))
    return out


def iterated_tensor_coproduct(w, parts: int):
    """All order-preserving splits of a word into ``parts`` subwords."""
    w = tuple(w)
    if parts == 1:
        return [(w,)]
    out = []
    for left, right in tensor_coproduct(w):
        for rest in iterated_tensor_coproduct(right, parts - 1):
            out.append((left,) + rest)
    return out


def wedge_coproduct(K):
    """Signed deshuffle coproduct on the exterior algebra.

    Returns a list of (A, B, sign) with K = A union B (ordered splittings)
    and the Koszul shuffle sign.
    """
    K = tuple(K)
    m = len(K)
    out = []
    for mask in range(1 << m):
        A = tuple(K[i] for i in range(m) if mask >> i & 1)
        B = tuple(K[i] for i in range(m) if not mask >> i & 1)
        # sign of un-riffling K into (A, B): count inversions across the split
        inv = sum(1 for a in A for b in B if a > b)
        out.append((A, B, -1 if inv & 1 else 1))
    return out


# ---------------------------------------------------------------------------
# Determinant pairing and Hodge star.

def det(rows):
    """Determinant by Laplace expansion; fine at fiber dimensions <= 4."""
    m = len(rows)
    if m == 0:
        return 1
    if m == 1:
        return rows[0][0]
    total = 0
    for j in range(m):
        if rows[0][j] == 0:
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def det_pairing(covectors, kvector):
    """Pairing <a1 ^ ... ^ ak, v1, ..., vk> = det(ai(vj)).

    ``covectors`` is a list of k coefficient tuples; ``kvector`` is either a
    list of k vector coefficient tuples or a dict {anti-index: coeff}.
    """
    k = len(covectors)
    if isinstance(kvector, dict):
        total = 0
        for K, c in kvector.items():
            if len(K) != k:
                raise ValueError("degree mismatch in det_pairing")
            if c == 0:
                continue
            rows = [[cov[j] for j in K] for cov in covectors]
            total += c * det(rows)
        return total
    if len(kvector) != k:
        raise ValueError("degree mismatch in det_pairing")
    rows = [[sum(cov[j] * vec[j] for j in range(len(vec))) for vec in kvector]
            for cov in covectors]
    return det(rows)


@dataclass(frozen=True)
class MetricSignature:
    """Diagonal signs of an ordered orthonormal frame."""

    signs: tuple

    def __post_init__(self):
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signature entries must be +1 or -1")

    @property
    def n(self):
        return len(self.signs)

    def product(self, J) -> int:
        out = 1
        for j in J:
            out *= self.signs[j]
        return out


def _complement(K, n):
    return tuple(i for i in range(n) if i not in K)


def hodge_star(alpha: dict, sig: MetricSignature) -> dict:
    """Hodge star on multivectors expressed in an ordered orthonormal frame.

    On basis elements: star(x_J) = sgn(I J) * (-1)^{|I| |J|} * s(J) * x_I
    with I the complement of J; extended linearly.
    """
    n = sig.n
    out = {}
    for J, c in alpha.items():
        if c == 0:
            continue
        I = _complement(J, n)
        sign = sort_sign(I + J) * ((-1) ** (len(I) * len(J))) * sig.product(J)
        out[I] = out.get(I, 0) + sign * c
    return {K: v for K, v in out.items() if v != 0}


def hodge_star_dual(omega: dict, sig: MetricSignature) -> dict:
    """Hodge star on the dual exterior algebra: star(x^I) = sgn(I J) s(I) x^J."""
    n = sig.n
    out = {}
    for I, c in omega.items():
        if c == 0:
            continue
        J = _complement(I, n)
        sign = sort_sign(I + J) * sig.product(I)
        out[J] = out.get(J, 0) + sign * c
    return {K: v for K, v in out.items() if v != 0}


def hodge_star_inverse(alpha: dict, sig: MetricSignature) -> dict:
    """Inverse of :func:`hodge_star`.

    Uses star(star(x)) = (-1)^{k(n-k)} s(0..n-1) x on degree-k input, so the
    inverse of star on degree m applies star once and rescales.
    """
    n = sig.n
    stot = sig.product(range(n))
    out = {}
    for J, c in alpha.items():
        m = len(J)
        k = n - m  # degree of the preimage
        factor = ((-1) ** (k * (n - k))) * stot
        part = hodge_star({J: c}, sig)
        for I, v in part.items():
            out[I] = out.get(I, 0) + factor * v
    return {K: v for K, v in out.items() if v != 0}


# ---------------------------------------------------------------------------
# Elements of the pointwise algebra tensor(T_p M) box wedge(E_p).

class TensorExtElement:
    """Finitely supported coefficient map over (word, anti-index) pairs.

    Mixed word lengths and exterior degrees are allowed; degree/order
    homogeneity is asserted only by operations that need it.
    """

    __slots__ = ("n", "d", "coeffs")

    def __init__(self, n: int, d: int, coeffs=None):
        self.n = n
        self.d = d
        self.coeffs = {}
        if coeffs:
            for (w, K), c in coeffs.items():
                self.add_term(w, K, c)

    def add_term(self, w, K, c):
        if c == 0:
            return
        key = (check_word(w, self.n), check_anti_index(K, self.d))
        cur = self.coeffs.get(key, 0)
        new = cur + c
        if new == 0:
            self.coeffs.pop(key, None)
        else:
            self.coeffs[key] = new

    def items(self):
        return sorted(self.coeffs.items(),
                      key=lambda kv: (gradlex_key(kv[0][0]), gradlex_key(kv[0][1])))

    def scale(self, a) -> "TensorExtElement":
        out = TensorExtElement(self.n, self.d)
        if a != 0:
            for (w, K), c in self.coeffs.items():
                out.coeffs[(w, K)] = a * c
        return out

    def __add__(self, other: "TensorExtElement") -> "TensorExtElement":
        out = TensorExtElement(self.n, self.d)
        out.coeffs = dict(self.coeffs)
        for (w, K), c in other.coeffs.items():
            out.add_term(w, K, c)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def max_order(self) -> int:
        return max((len(w) for (w, _K) in self.coeffs), default=0)

    def degrees(self):
        return sorted({len(K) for (_w, K) in self.coeffs})

    def is_zero(self, tol=0) -> bool:
        return all(abs(c) <= tol for c in self.coeffs.values())

    def max_abs(self):
        return max((abs(c) for c in self.coeffs.values()), default=0)

    def __repr__(self):
        parts = [f"{c!r}*[{','.join(map(str, w))}|{','.join(map(str, K))}]"
                 for (w, K), c in self.items()]
        return "TensorExt(" + " + ".join(parts or ["0"]) + ")"

    # JSON keys use "i,j,...|a,b,..." for (word, anti-index).
    def to_json(self) -> dict:
        out = {}
        for (w, K), c in self.items():
            key = ",".join(map(str, w)) + "|" + ",".join(map(str, K))
            out[key] = float(c) if not isinstance(c, Fraction) else str(c)
        return out

    @staticmethod
    def from_json(n: int, d: int, data: dict) -> "TensorExtElement":
        el = TensorExtElement(n, d)
        for key, c in data.items():
            ws, ks = key.split("|")
            w = tuple(int(x) for x in ws.split(",") if x != "")
            K = tuple(int(x) for x in ks.split(",") if x != "")
            el.add_term(w, K, Fraction(c) if isinstance(c, str) else c)
        return el


def basis_element(n, d, w, K, c=1) -> TensorExtElement:
    el = TensorExtElement(n, d)
    el.add_term(w, K, c)
    return el


def delta_coproduct(x: TensorExtElement):
    """Coproduct on tensor(T_p) box wedge(E_p): deshuffle both factors.

    Returns a list of ((wL, KL), (wR, KR), coeff) summands.
    """
    out = []
    for (w, K), c in x.items():
        for (wl, wr) in tensor_coproduct(w):
            for (Kl, Kr, s) in wedge_coproduct(K):
                out.append(((wl, Kl), (wr, Kr), s * c))
    return out


def all_words(n: int, max_len: int):
    """All words over 0..n-1 of length <= max_len, in graded-lex order."""
    out = [()]
    for ell in range(1, max_len + 1):
        out.extend(itertools.product(range(n), repeat=ell))
    return out


def sorted_words(n: int, max_len: int):
    """Nondecreasing words of length <= max_len (the PBW word set)."""
    return [w for w in all_words(n, max_len) if all(w[i] <= w[i + 1] for i in range(len(w) - 1))]


def anti_indices(d: int, k: int):
    """Strictly increasing k-tuples from 0..d-1, lexicographic."""
    return list(itertools.combinations(range(d), k))
