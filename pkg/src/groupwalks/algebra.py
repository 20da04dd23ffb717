"""Exact arithmetic over prime fields F_p.

Scalars carry their modulus and refuse mixed-modulus arithmetic.  Vectors
over F_2 are bit-packed into Python ints so that addition is a single XOR;
vectors over odd p store one entry per coordinate.  On top of these sit
linear functionals xi (with xi(v) = sum_i xi_i v_i mod p), the standard
alternating form on F_p^{2m},

    omega(v, w) = sum_q ( v_{2q} w_{2q+1} - v_{2q+1} w_{2q} ),

and Gaussian-elimination rank.  Everything here is exact integer
arithmetic; no floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import BudgetError, CharacteristicError, DimensionMismatch

__all__ = [
    "DEFAULT_ENUM_BUDGET",
    "FieldScalar",
    "FieldVector",
    "LinearFunctional",
    "SymplecticForm",
    "check_prime",
    "half_mod",
    "rank",
    "rank_bits",
    "eval_functional",
    "symplectic_eval",
    "enumerate_functionals",
]

DEFAULT_ENUM_BUDGET = 1 << 24

# Largest modulus the trial-division primality check will certify.
_PRIME_CHECK_MAX = 1 << 20
_prime_cache: dict[int, bool] = {}


def check_prime(p: int) -> None:
    """Raise ValueError unless p is a certified prime modulus."""
    if not isinstance(p, int) or p < 2:
        raise ValueError(f"modulus must be an integer >= 2, got {p!r}")
    if p > _PRIME_CHECK_MAX:
        raise ValueError(f"modulus {p} exceeds the primality-check ceiling {_PRIME_CHECK_MAX}")
    cached = _prime_cache.get(p)
    if cached is None:
        cached = True
        d = 2
        while d * d <= p:
            if p % d == 0:
                cached = False
                break
            d += 1
        _prime_cache[p] = cached
    if not cached:
        raise ValueError(f"modulus {p} is not prime")


def half_mod(p: int) -> int:
    """The scalar 1/2 in F_p, i.e. (p+1)/2.  Undefined in characteristic two."""
    check_prime(p)
    if p == 2:
        raise CharacteristicError("1/2 does not exist over F_2")
    return (p + 1) // 2


@dataclass(frozen=True)
class FieldScalar:
    """An element of F_p, stored as a reduced representative in [0, p)."""

    value: int
    p: int

    def __post_init__(self):
        check_prime(self.p)
        object.__setattr__(self, "value", self.value % self.p)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldScalar):
            if other.p != self.p:
                raise DimensionMismatch(f"mixed moduli {self.p} and {other.p}")
            return other.value
        if isinstance(other, int):
            return other % self.p
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldScalar((self.value + v) % self.p, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldScalar((self.value - v) % self.p, self.p)

    def __mul__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldScalar((self.value * v) % self.p, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldScalar(-self.value % self.p, self.p)

    def inverse(self) -> "FieldScalar":
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse")
        return FieldScalar(pow(self.value, self.p - 2, self.p), self.p)

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"F{self.p}({self.value})"


class FieldVector:
    """A vector in F_p^dim.

    Over F_2 the entries are packed into one int (coordinate i is bit i),
    so addition is XOR; over odd p a tuple of reduced entries is kept.
    Instances are immutable and hashable.
    """

    __slots__ = ("p", "dim", "_key")

    def __init__(self, entries: Iterable[int], p: int):
        check_prime(p)
        ent = tuple(int(e) % p for e in entries)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "dim", len(ent))
        if p == 2:
            bits = 0
            for i, e in enumerate(ent):
                bits |= e << i
            object.__setattr__(self, "_key", bits)
        else:
            object.__setattr__(self, "_key", ent)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("FieldVector is immutable")

    @classmethod
    def zero(cls, dim: int, p: int) -> "FieldVector":
        return cls((0,) * dim, p)

    @classmethod
    def from_bits(cls, bits: int, dim: int) -> "FieldVector":
        """F_2 vector from a packed bit pattern (coordinate i = bit i)."""
        if bits < 0 or bits >> dim:
            raise ValueError(f"bit pattern {bits} does not fit in {dim} coordinates")
        v = cls.__new__(cls)
        object.__setattr__(v, "p", 2)
        object.__setattr__(v, "dim", dim)
        object.__setattr__(v, "_key", bits)
        return v

    @property
    def bits(self) -> int:
        if self.p != 2:
            raise CharacteristicError("bit view only exists over F_2")
        return self._key

    @property
    def entries(self) -> tuple[int, ...]:
        if self.p == 2:
            return tuple((self._key >> i) & 1 for i in range(self.dim))
        return self._key

    def _check_same(self, other: "FieldVector") -> None:
        if not isinstance(other, FieldVector):
            raise TypeError(f"expected FieldVector, got {type(other).__name__}")
        if self.p != other.p or self.dim != other.dim:
            raise DimensionMismatch(
                f"shape ({self.dim},{self.p}) vs ({other.dim},{other.p})"
            )

    def __add__(self, other: "FieldVector") -> "FieldVector":
        self._check_same(other)
        if self.p == 2:
            return FieldVector.from_bits(self._key ^ other._key, self.dim)
        return FieldVector(
            (a + b for a, b in zip(self._key, other._key)), self.p
        )

    def __sub__(self, other: "FieldVector") -> "FieldVector":
        self._check_same(other)
        if self.p == 2:
            return FieldVector.from_bits(self._key ^ other._key, self.dim)
        return FieldVector(
            (a - b for a, b in zip(self._key, other._key)), self.p
        )

    def __neg__(self) -> "FieldVector":
        if self.p == 2:
            return self
        return FieldVector((-a for a in self._key), self.p)

    def scale(self, a: int) -> "FieldVector":
        a = int(a) % self.p
        if self.p == 2:
            return self if a else FieldVector.zero(self.dim, 2)
        return FieldVector((a * e for e in self._key), self.p)

    def is_zero(self) -> bool:
        return self._key == 0 if self.p == 2 else all(e == 0 for e in self._key)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.dim:
            raise IndexError(i)
        if self.p == 2:
            return (self._key >> i) & 1
        return self._key[i]

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldVector)
            and self.p == other.p
            and self.dim == other.dim
            and self._key == other._key
        )

    def __hash__(self) -> int:
        return hash((self.p, self.dim, self._key))

    def __repr__(self) -> str:
        return f"FieldVector({list(self.entries)}, p={self.p})"


def rank_bits(rows: Sequence[int], width: int | None = None) -> int:
    """Rank over F_2 of rows given as packed ints (bitsets)."""
    pivots: list[int] = []
    for row in rows:
        r = int(row)
        for pv in pivots:
            low = pv & -pv
            if r & low:
                r ^= pv
        if r:
            pivots.append(r)
    return len(pivots)


def rank(vectors: Sequence[FieldVector], dim: int | None = None, p: int | None = None) -> int:
    """Rank of the span of the given vectors, by Gaussian elimination.

    dim/p are only needed to disambiguate the empty family (rank 0).
    """
    vecs = list(vectors)
    if not vecs:
        return 0
    p0, d0 = vecs[0].p, vecs[0].dim
    for v in vecs[1:]:
        if v.p != p0 or v.dim != d0:
            raise DimensionMismatch("vectors of mixed shape")
    if p is not None and p != p0:
        raise DimensionMismatch(f"declared p={p} but vectors live over F_{p0}")
    if dim is not None and dim != d0:
        raise DimensionMismatch(f"declared dim={dim} but vectors have dim {d0}")
    if p0 == 2:
        return rank_bits([v.bits for v in vecs], d0)
    # textbook elimination mod p
    mat = [list(v.entries) for v in vecs]
    r = 0
    for col in range(d0):
        piv = next((i for i in range(r, len(mat)) if mat[i][col] % p0 != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = pow(mat[r][col], p0 - 2, p0)
        mat[r] = [(x * inv) % p0 for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] % p0:
                c = mat[i][col]
                mat[i] = [(x - c * y) % p0 for x, y in zip(mat[i], mat[r])]
        r += 1
        if r == len(mat):
            break
    return r


@dataclass(frozen=True)
class LinearFunctional:
    """xi in (F_p^dim)^*, acting by xi(v) = sum_i coeffs_i v_i mod p."""

    coeffs: FieldVector

    @property
    def p(self) -> int:
        return self.coeffs.p

    @property
    def dim(self) -> int:
        return self.coeffs.dim

    def is_zero(self) -> bool:
        return self.coeffs.is_zero()

    def __call__(self, v: FieldVector) -> int:
        return int(eval_functional(self, v))


def eval_functional(xi: LinearFunctional, v: FieldVector) -> FieldScalar:
    """Evaluate xi(v) = sum_i xi_i v_i mod p."""
    c = xi.coeffs
    if v.p != c.p or v.dim != c.dim:
        raise DimensionMismatch(
            f"functional on ({c.dim},{c.p}) applied to vector of ({v.dim},{v.p})"
        )
    if c.p == 2:
        return FieldScalar((c.bits & v.bits).bit_count() & 1, 2)
    total = 0
    for a, b in zip(c.entries, v.entries):
        total += a * b
    return FieldScalar(total % c.p, c.p)


@dataclass(frozen=True)
class SymplecticForm:
    """The standard alternating form on F_p^h, h = 2m.

    Basis vectors are paired (e_0, e_1), (e_2, e_3), ...; each pair
    contributes v_{2q} w_{2q+1} - v_{2q+1} w_{2q}.  On the paired basis
    this gives omega(e_0, e_1) = 1 and omega(e_1, e_0) = -1.
    """

    h: int
    p: int

    def __post_init__(self):
        check_prime(self.p)
        if self.h <= 0 or self.h % 2 != 0:
            raise ValueError(f"alternating form needs even positive dimension, got h={self.h}")

    @property
    def m(self) -> int:
        return self.h // 2

    def eval(self, v: FieldVector, w: FieldVector) -> FieldScalar:
        return symplectic_eval(self, v, w)

    def gram(self) -> list[list[int]]:
        """Gram matrix J with J[i][j] = omega(e_i, e_j)."""
        g = [[0] * self.h for _ in range(self.h)]
        for q in range(self.m):
            g[2 * q][2 * q + 1] = 1
            g[2 * q + 1][2 * q] = self.p - 1
        return g


def symplectic_eval(form: SymplecticForm, v: FieldVector, w: FieldVector) -> FieldScalar:
    """omega(v, w) = sum_q v_{2q} w_{2q+1} - v_{2q+1} w_{2q}  (mod p)."""
    if v.p != form.p or w.p != form.p or v.dim != form.h or w.dim != form.h:
        raise DimensionMismatch(
            f"form on ({form.h},{form.p}) applied to ({v.dim},{v.p}) and ({w.dim},{w.p})"
        )
    a = v.entries
    b = w.entries
    total = 0
    for q in range(form.m):
        total += a[2 * q] * b[2 * q + 1] - a[2 * q + 1] * b[2 * q]
    return FieldScalar(total % form.p, form.p)


def enumerate_functionals(
    dim: int,
    p: int,
    include_zero: bool = False,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> Iterator[LinearFunctional]:
    """Yield every functional on F_p^dim (p^dim of them), in base-p counter order.

    Coordinate 0 of the coefficient vector is the fastest-varying digit.
    Raises BudgetError when p^dim exceeds the budget.
    """
    check_prime(p)
    count = p**dim
    if count > budget:
        raise BudgetError(f"{count} functionals exceed the enumeration budget {budget}")
    for code in range(count):
        if code == 0 and not include_zero:
            continue
        digits = []
        c = code
        for _ in range(dim):
            digits.append(c % p)
            c //= p
        yield LinearFunctional(FieldVector(digits, p))
