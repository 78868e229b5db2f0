"""Deformation parameters and the scalar attached to reordering a word.

Indices are 0-based throughout: letters of a word lie in ``range(n)`` and a
permutation of size ``m`` is a tuple ``p`` with ``p[i] = sigma(i)``.

For a q-commuting tuple (``T_j T_i = q[i, j] T_i T_j``) the product
``T_{x_0} ... T_{x_{m-1}}`` equals ``c * T_{y_0} ... T_{y_{m-1}}`` with
``y_j = x_{sigma^{-1}(j)}``.  The scalar ``c`` is ``q_coeff(x, sigma)``.
Swapping an adjacent pair ``(a, b) -> (b, a)`` contributes ``q[b, a]``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

MODULUS_TOL = 1e-12


class InvalidQParams(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QParams:
    """n x n matrix of unit-modulus deformation coefficients."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=complex)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        validate_q(q)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def __getitem__(self, ij):
        return self.q[ij]

    @classmethod
    def trivial(cls, n: int) -> "QParams":
        return cls(np.ones((n, n), dtype=complex))

    @classmethod
    def uniform(cls, n: int, theta: float) -> "QParams":
        """q[i, j] = exp(i theta) for i < j."""
        z = np.exp(1j * theta)
        q = np.ones((n, n), dtype=complex)
        iu = np.triu_indices(n, 1)
        q[iu] = z
        q[(iu[1], iu[0])] = np.conj(z)
        return cls(q)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "QParams":
        q = np.ones((n, n), dtype=complex)
        for i in range(n):
            for j in range(i + 1, n):
                z = np.exp(2j * np.pi * rng.random())
                q[i, j], q[j, i] = z, np.conj(z)
        return cls(q)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mode": "matrix",
            "entries": [[float(z.real), float(z.imag)] for z in self.q.ravel()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QParams":
        try:
            n = int(d["n"])
            mode = d.get("mode", "matrix")
            if n < 1:
                raise InvalidQParams("n must be >= 1")
            if mode == "uniform":
                return cls.uniform(n, float(d["theta"]))
            if mode == "matrix":
                entries = d["entries"]
                if len(entries) != n * n:
                    raise InvalidQParams(f"expected {n * n} entries, got {len(entries)}")
                vals = [complex(float(re), float(im)) for re, im in entries]
                return cls(np.array(vals).reshape(n, n))
        except (KeyError, TypeError) as exc:
            raise InvalidQParams(f"malformed QParams: {exc!r}") from exc
        raise InvalidQParams(f"unknown mode {mode!r}")

    @classmethod
    def from_json(cls, text: str) -> "QParams":
        return cls.from_dict(json.loads(text))


def validate_q(q: np.ndarray, tol: float = MODULUS_TOL) -> None:
    if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
        raise InvalidQParams(f"q must be a non-empty square matrix, got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise InvalidQParams("q has non-finite entries")
    if np.max(np.abs(np.abs(q) - 1)) > tol:
        raise InvalidQParams("all q_ij must have modulus one")
    if np.max(np.abs(np.diag(q) - 1)) > tol:
        raise InvalidQParams("q_ii must equal 1")
    if np.max(np.abs(q.T - np.conj(q))) > tol:
        raise InvalidQParams("q_ji must equal conj(q_ij)")


def as_qmatrix(q) -> np.ndarray:
    return q.q if isinstance(q, QParams) else np.asarray(q, dtype=complex)


# -- permutations -----------------------------------------------------------

def identity(m: int) -> tuple[int, ...]:
    return tuple(range(m))


def compose(s1, s2) -> tuple[int, ...]:
    """(s1 s2)(i) = s1(s2(i))."""
    return tuple(s1[s2[i]] for i in range(len(s2)))


def inverse(s) -> tuple[int, ...]:
    inv = [0] * len(s)
    for i, si in enumerate(s):
        inv[si] = i
    return tuple(inv)


def check_permutation(s, m: int | None = None) -> tuple[int, ...]:
    s = tuple(int(v) for v in s)
    if sorted(s) != list(range(len(s))):
        raise ValueError(f"{s} is not a permutation")
    if m is not None and len(s) != m:
        raise ValueError(f"permutation of size {len(s)} where {m} expected")
    return s


def all_permutations(m: int):
    """Deterministic enumeration of S_m (lexicographic)."""
    return itertools.permutations(range(m))


def transposition_product(positions, m: int) -> tuple[int, ...]:
    """tau_1 tau_2 ... tau_s for adjacent transpositions (k, k+1)."""
    p = list(range(m))
    for k in positions:
        # right-multiplying by (k, k+1) swaps the images at k and k+1
        p[k], p[k + 1] = p[k + 1], p[k]
    return tuple(p)


def bubble_decomposition(sigma) -> list[int]:
    """Positions k_1..k_s with sigma^{-1} = tau_1 ... tau_s (reduced word)."""
    target = list(inverse(sigma))
    swaps = []
    # bubble-sort target to the identity; target = tau_{k_s} ... tau_{k_1}
    changed = True
    while changed:
        changed = False
        for k in range(len(target) - 1):
            if target[k] > target[k + 1]:
                target[k], target[k + 1] = target[k + 1], target[k]
                swaps.append(k)
                changed = True
    return swaps[::-1]


def random_decomposition(sigma, rng: np.random.Generator, padding: int = 2) -> list[int]:
    """Another decomposition of sigma^{-1}: a random reduced word, with
    ``padding`` cancelling pairs (k, k) inserted at random places."""
    target = list(inverse(sigma))
    m = len(target)
    swaps = []
    while True:
        descents = [k for k in range(m - 1) if target[k] > target[k + 1]]
        if not descents:
            break
        k = int(rng.choice(descents))
        target[k], target[k + 1] = target[k + 1], target[k]
        swaps.append(k)
    word = swaps[::-1]
    if m >= 2:
        for _ in range(padding):
            k = int(rng.integers(m - 1))
            at = int(rng.integers(len(word) + 1))
            word[at:at] = [k, k]
    return word


# -- the scalar q^sigma(x) ---------------------------------------------------

def q_coeff_chain(q, x, positions) -> complex:
    """Reference value: replay adjacent swaps on the word, one factor per swap.

    The swaps are applied in list order, so the final word is
    ``x o tau_1 o ... o tau_s``; each swap of ``(a, b)`` into ``(b, a)``
    multiplies by ``q[b, a]``, which is the relation ``T_a T_b = q_ba T_b T_a``.
    """
    qm = as_qmatrix(q)
    w = list(x)
    m = len(w)
    c = 1.0 + 0.0j
    for k in positions:
        if not 0 <= k < m - 1:
            raise ValueError(f"swap position {k} out of range for word of length {m}")
        a, b = w[k], w[k + 1]
        c *= qm[b, a]
        w[k], w[k + 1] = b, a
    return complex(c)


def inversion_pairs(sigma) -> list[tuple[int, int]]:
    """Pairs (i, k), i < k, with sigma^{-1}(i) > sigma^{-1}(k)."""
    inv = inverse(sigma)
    m = len(inv)
    return [(i, k) for i in range(m) for k in range(i + 1, m) if inv[i] > inv[k]]


def q_coeff_closed(q, x, sigma) -> complex:
    """Product of q[x_{sigma^-1(i)}, x_{sigma^-1(k)}] over the inversion pairs.

    The subscript order (left letter of the *reordered* word first) is the one
    reproduced by :func:`q_coeff_chain`.
    """
    qm = as_qmatrix(q)
    if len(sigma) != len(x):
        raise ValueError(f"permutation size {len(sigma)} != word length {len(x)}")
    inv = inverse(sigma)
    c = 1.0 + 0.0j
    for i, k in inversion_pairs(sigma):
        c *= qm[x[inv[i]], x[inv[k]]]
    return complex(c)


def q_coeff_of_sorted(q, y) -> complex:
    """Scalar picked up when the sorted rearrangement of ``y`` is reordered to ``y``.

    With ``x = sorted(y)`` and ``y_i = x_{sigma(i)}`` this is
    ``q_coeff_closed(q, x, sigma^{-1})``; ties are broken stably.
    """
    y = tuple(y)
    order = sorted(range(len(y)), key=lambda i: y[i])  # order[r] = index in y of rank r
    x = tuple(y[i] for i in order)
    sigma = inverse(order)  # y_i = x_{sigma(i)}
    return q_coeff_closed(q, x, inverse(sigma))


def sorting_permutations(y) -> list[tuple[int, ...]]:
    """All sigma with y_i = sorted(y)_{sigma(i)}."""
    x = sorted(y)
    out = []
    for s in itertools.permutations(range(len(y))):
        if all(y[i] == x[s[i]] for i in range(len(y))):
            out.append(tuple(s))
    return out


def multinomial_norm_sq(k) -> float:
    """k_1! ... k_n! / |k|!"""
    num = math.prod(math.factorial(int(v)) for v in k)
    return num / math.factorial(int(sum(k)))
