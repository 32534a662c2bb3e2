"""Exact root-system and Weyl-group combinatorics for SL(n).

Conventions (fixed once, audited by tests against the block-swap element):
permutations are stored as one-line images ``w(1..n)``; the action on weight
vectors is the left action ``(w.lam)_{w(i)} = lam_i``.  Weight vectors are
points of the dual Cartan modulo constant shift; all pairings are
shift-invariant.  Coweights (rho_vee, coroots) are exact rationals, weight
entries are complex floats.

Everything here is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import (
    CombinatorialBlowup,
    DimensionMismatch,
    InvalidDimension,
    InvalidParabolic,
)

MAX_N = 8
_SHIFT_TOL = 1e-12


@dataclass(frozen=True)
class WeightVector:
    """A point of the complexified dual Cartan, modulo constant shift.

    ``entries`` is the unperturbed part; ``eps_dir``, when present, is the
    coefficient vector of a symbolic perturbation parameter, so the vector
    represents entries + eps*eps_dir with eps left symbolic until a
    concrete evaluation.
    """

    n: int
    entries: Tuple[complex, ...]
    eps_dir: Optional[Tuple[complex, ...]] = None

    def __post_init__(self):
        if self.n < 2:
            raise InvalidDimension(f"need n >= 2, got {self.n}")
        if len(self.entries) != self.n:
            raise DimensionMismatch("entry count != n")
        if self.eps_dir is not None and len(self.eps_dir) != self.n:
            raise DimensionMismatch("eps_dir length != n")

    def canonical(self) -> Tuple[complex, ...]:
        """Representative with entries summing to 0 (mean subtracted)."""
        m = sum(self.entries) / self.n
        return tuple(e - m for e in self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightVector) or other.n != self.n:
            return NotImplemented
        if any(abs(a - b) > _SHIFT_TOL for a, b in zip(self.canonical(), other.canonical())):
            return False
        mine = self.eps_dir or (0.0,) * self.n
        theirs = other.eps_dir or (0.0,) * self.n
        ma = sum(mine) / self.n
        mb = sum(theirs) / self.n
        return all(abs((a - ma) - (b - mb)) <= _SHIFT_TOL for a, b in zip(mine, theirs))

    def __hash__(self):
        return hash((self.n, tuple(round(c.real, 9) for c in map(complex, self.canonical()))))

    def shift(self, c: complex) -> "WeightVector":
        return WeightVector(self.n, tuple(e + c for e in self.entries), self.eps_dir)

    def __add__(self, other: "WeightVector") -> "WeightVector":
        if other.n != self.n:
            raise DimensionMismatch("dimension mismatch in addition")
        da, db = self.eps_dir, other.eps_dir
        out_dir = None
        if da is not None or db is not None:
            da = da or (0.0,) * self.n
            db = db or (0.0,) * self.n
            out_dir = tuple(a + b for a, b in zip(da, db))
        return WeightVector(
            self.n, tuple(a + b for a, b in zip(self.entries, other.entries)), out_dir
        )

    def __neg__(self) -> "WeightVector":
        return self.scale(-1)

    def scale(self, c: complex) -> "WeightVector":
        d = None if self.eps_dir is None else tuple(c * x for x in self.eps_dir)
        return WeightVector(self.n, tuple(c * e for e in self.entries), d)

    def plus_eps(self, direction: "WeightVector") -> "WeightVector":
        """Attach the symbolic perturbation eps*direction."""
        if direction.n != self.n:
            raise DimensionMismatch("direction dimension mismatch")
        base = self.eps_dir or (0.0,) * self.n
        return WeightVector(
            self.n,
            self.entries,
            tuple(a + b for a, b in zip(base, direction.entries)),
        )

    def at_eps(self, eps: float) -> "WeightVector":
        """Concrete vector entries + eps*eps_dir, dropping the symbol."""
        if self.eps_dir is None:
            return self
        return WeightVector(
            self.n, tuple(e + eps * d for e, d in zip(self.entries, self.eps_dir))
        )


@dataclass(frozen=True)
class WeylElement:
    """A permutation of {1..n}, stored as the one-line image w(1),...,w(n)."""

    n: int
    image: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.image) != list(range(1, self.n + 1)):
            raise DimensionMismatch(f"image {self.image} is not a bijection of 1..{self.n}")

    def __call__(self, i: int) -> int:
        return self.image[i - 1]

    def __mul__(self, other: "WeylElement") -> "WeylElement":
        """Composition (self*other)(i) = self(other(i))."""
        if other.n != self.n:
            raise DimensionMismatch("composition dimension mismatch")
        return WeylElement(self.n, tuple(self.image[j - 1] for j in other.image))

    def inverse(self) -> "WeylElement":
        inv = [0] * self.n
        for i, v in enumerate(self.image, start=1):
            inv[v - 1] = i
        return WeylElement(self.n, tuple(inv))

    @staticmethod
    def identity(n: int) -> "WeylElement":
        return WeylElement(n, tuple(range(1, n + 1)))

    @staticmethod
    def transposition(n: int, j: int) -> "WeylElement":
        """The simple reflection (j j+1)."""
        img = list(range(1, n + 1))
        img[j - 1], img[j] = img[j], img[j - 1]
        return WeylElement(n, tuple(img))

    def is_identity(self) -> bool:
        return all(v == i for i, v in enumerate(self.image, start=1))


@dataclass(frozen=True)
class CoweightVector:
    """Element of the Cartan with exact rational entries summing to zero."""

    n: int
    entries: Tuple[Fraction, ...]

    def __post_init__(self):
        if sum(self.entries, Fraction(0)) != 0:
            raise DimensionMismatch("coweight entries must sum to exactly 0")

    def pair(self, lam: WeightVector) -> complex:
        """<self, lam> = sum_i self_i * lam_i; shift-invariant."""
        return sum(float(c) * e for c, e in zip(self.entries, lam.entries))


def rho(n: int) -> WeightVector:
    """Half the sum of positive roots: ((n-1)/2, (n-3)/2, ..., (1-n)/2)."""
    if n < 2:
        raise InvalidDimension(f"need n >= 2, got {n}")
    return WeightVector(n, tuple((n - 2 * i + 1) / 2 for i in range(1, n + 1)))


def rho_covector(n: int) -> CoweightVector:
    """The coweight with the same half-integer entries as rho; exact."""
    if n < 2:
        raise InvalidDimension(f"need n >= 2, got {n}")
    return CoweightVector(n, tuple(Fraction(n - 2 * i + 1, 2) for i in range(1, n + 1)))


def coroot(n: int, j: int) -> CoweightVector:
    """Simple coroot alpha_j_vee = e_j - e_{j+1}."""
    if not 1 <= j <= n - 1:
        raise InvalidParabolic(f"coroot index {j} out of range for n={n}")
    ent = [Fraction(0)] * n
    ent[j - 1] = Fraction(1)
    ent[j] = Fraction(-1)
    return CoweightVector(n, tuple(ent))


def lambda_of_s(n: int, k: int, s: complex) -> WeightVector:
    """The spectral parameter identifying the rank-k series with a Borel one.

    First n-k entries -n, -n+1, ..., -k-1; last k entries -s-k, ..., -s-1.
    """
    if not 1 <= k <= n - 1:
        raise InvalidParabolic(f"k={k} out of range for n={n}")
    head = [complex(-n + i) for i in range(n - k)]
    tail = [-s - k + i for i in range(k)]
    return WeightVector(n, tuple(head + tail))


def act(w: WeylElement, lam: WeightVector) -> WeightVector:
    """Left action: result_{w(i)} = lam_i."""
    if w.n != lam.n:
        raise DimensionMismatch("Weyl element and weight dimension mismatch")
    out = [0j] * lam.n
    for i in range(lam.n):
        out[w.image[i] - 1] = lam.entries[i]
    d = None
    if lam.eps_dir is not None:
        d = [0j] * lam.n
        for i in range(lam.n):
            d[w.image[i] - 1] = lam.eps_dir[i]
        d = tuple(d)
    return WeightVector(lam.n, tuple(out), d)


def coroot_pairing(j: int, lam: WeightVector) -> complex:
    """<alpha_j_vee, lam> = lam_j - lam_{j+1}."""
    if not 1 <= j <= lam.n - 1:
        raise InvalidParabolic(f"pairing index {j} out of range for n={lam.n}")
    return lam.entries[j - 1] - lam.entries[j]


def rho_covector_pairing(lam: WeightVector) -> complex:
    """<rho_vee, lam>; furnishes every T-exponent in the truncated formulas."""
    return rho_covector(lam.n).pair(lam)


def inversion_set(w: WeylElement) -> List[Tuple[int, int]]:
    """Positive roots sent negative: {(i,j) : i < j, w(i) > w(j)}."""
    img = w.image
    return [
        (i, j)
        for i in range(1, w.n + 1)
        for j in range(i + 1, w.n + 1)
        if img[i - 1] > img[j - 1]
    ]


def w_star(n: int, k: int) -> WeylElement:
    """The unique block swap with w(n-k+1)<...<w(n)<w(1)<...<w(n-k).

    Sends the two blocks of lambda(s) past each other; at s=n its action on
    lambda equals -rho modulo shift (audited in tests, fixing the action
    convention).
    """
    if not 1 <= k <= n - 1:
        raise InvalidParabolic(f"k={k} out of range for n={n}")
    image = tuple(range(k + 1, n + 1)) + tuple(range(1, k + 1))
    return WeylElement(n, image)


def all_weyl(n: int) -> Iterator[WeylElement]:
    """All n! elements, lexicographic in one-line images; n <= 8 guard."""
    if n > MAX_N:
        raise CombinatorialBlowup(f"refusing to enumerate W for n={n} > {MAX_N}")
    for img in itertools.permutations(range(1, n + 1)):
        yield WeylElement(n, img)
