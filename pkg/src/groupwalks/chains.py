"""State spaces and Markov kernels for coordinate-replacement walks.

Three reversible walks share one interface:

* TransvectionWalk — states are n-tuples of rows in F_2^k whose rows span
  F_2^k; a move (a, b) with a != b replaces row b by row_b + row_a.  The
  kernel averages over all n(n-1) ordered pairs.
* OneColumnWalk — states are nonzero vectors in F_p^r.  For odd p a move
  (i, j, a) replaces Y_i by Y_i + a Y_j with a uniform in F_p (a = 0 is a
  hold); over F_2 the walk is the coordinate projection of the tuple walk
  and a move (i, j) always adds, so there is no exponent.
* PaPraWalk — states are r-tuples of Heisenberg group elements that
  generate H; a move (i, j, a, side) replaces g_i by g_i g_j^a (right) or
  g_j^a g_i (left), averaging over both sides, all exponents a in F_p and
  all ordered pairs.  Horizontal parts evolve exactly as the p-ary
  one-column walk on each coordinate functional.

Every move is invertible by another move of the same kernel, so all three
kernels are doubly stochastic and reversible with respect to the uniform
law on their state space.  An optional laziness weight q turns a kernel P
into q I + (1-q) P.

States are plain tuples (ints for field rows, HeisenbergElement for
Heisenberg tuples).  Exhaustive enumerations pack states into integers and
order the space by that code, which keeps golden files stable.  Simulation
uses the counter-based Philox generator keyed by (seed, trajectory id), so
trajectories are reproducible and embarrassingly parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .algebra import check_prime, rank_bits
from .errors import BudgetError, InvalidMove
from .groups import (
    HeisenbergElement,
    decode_element,
    encode_element,
    generates,
    h_mul,
    h_pow,
)

__all__ = [
    "DEFAULT_STATE_BUDGET",
    "EnumeratedSpace",
    "stiefel_space",
    "one_column_space",
    "heisenberg_tuple_space",
    "row_space",
    "heisenberg_space",
    "TransvectionWalk",
    "OneColumnWalk",
    "PaPraWalk",
    "transvection_step",
    "one_column_step",
    "pa_pra_step",
    "FibreKernel",
    "build_fibre_kernel",
    "Trajectory",
    "simulate",
    "philox_generator",
    "rank_bits_batch",
    "rank_modp_batch",
    "connected_components",
    "one_column_batch",
    "pa_pra_batch",
    "transvection_batch",
]

DEFAULT_STATE_BUDGET = 1 << 24


def philox_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream); streams never collide."""
    key = np.array([np.uint64(seed & (2**64 - 1)), np.uint64(stream & (2**64 - 1))])
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# enumerated spaces
# ---------------------------------------------------------------------------


class EnumeratedSpace:
    """A finite state space enumerated by sorted packed-integer codes."""

    def __init__(
        self,
        codes: np.ndarray,
        encode: Callable,
        decode: Callable,
        description: str = "",
    ):
        codes = np.asarray(codes, dtype=np.int64)
        if np.any(np.diff(codes) <= 0):
            raise ValueError("space codes must be strictly increasing")
        codes.flags.writeable = False
        self.codes = codes
        self.encode = encode
        self.decode = decode
        self.description = description

    @property
    def size(self) -> int:
        return int(self.codes.shape[0])

    def __len__(self) -> int:
        return self.size

    def index_of_code(self, code: int) -> int:
        pos = int(np.searchsorted(self.codes, code))
        if pos >= self.size or self.codes[pos] != code:
            raise KeyError(f"code {code} is not in the space")
        return pos

    def index_of(self, state) -> int:
        return self.index_of_code(self.encode(state))

    def state_at(self, i: int):
        return self.decode(int(self.codes[i]))

    def states(self) -> Iterator:
        for c in self.codes:
            yield self.decode(int(c))

    def __repr__(self) -> str:
        return f"EnumeratedSpace({self.description or 'custom'}, size={self.size})"


def _check_budget(count: int, budget: int, what: str) -> None:
    if count > budget:
        raise BudgetError(f"{what}: {count} states exceed the budget {budget}")


def _encode_rows(rows: Sequence[int], k: int) -> int:
    code = 0
    for i, r in enumerate(rows):
        code |= int(r) << (i * k)
    return code


def _decode_rows(code: int, n: int, k: int) -> tuple[int, ...]:
    mask = (1 << k) - 1
    return tuple((code >> (i * k)) & mask for i in range(n))


def stiefel_space(n: int, k: int, budget: int = DEFAULT_STATE_BUDGET) -> EnumeratedSpace:
    """All n-tuples of rows in F_2^k whose rows span F_2^k.

    The count is prod_{q<k} (2^n - 2^q); enumeration scans the ambient
    2^{nk} tuples, so the budget applies to the ambient size.
    """
    if k < 1 or n < k:
        raise ValueError(f"need n >= k >= 1 for a spanning tuple, got n={n}, k={k}")
    ambient = 1 << (n * k)
    _check_budget(ambient, budget, f"Stief({n},{k}) ambient")
    rows = _all_row_arrays(n, k)
    ranks = rank_bits_batch(rows, k)
    codes = np.nonzero(ranks == k)[0].astype(np.int64)
    expected = 1
    for q in range(k):
        expected *= (1 << n) - (1 << q)
    if codes.shape[0] != expected:
        raise RuntimeError(
            f"Stiefel enumeration mismatch: got {codes.shape[0]}, formula {expected}"
        )
    return EnumeratedSpace(
        codes,
        encode=lambda st: _encode_rows(st, k),
        decode=lambda c: _decode_rows(c, n, k),
        description=f"Stief({n},{k})",
    )


def _all_row_arrays(n: int, k: int) -> np.ndarray:
    """(2^{nk}, n) array of packed rows for every ambient tuple code."""
    ambient = 1 << (n * k)
    codes = np.arange(ambient, dtype=np.int64)
    mask = (1 << k) - 1
    rows = np.empty((ambient, n), dtype=np.int64)
    for i in range(n):
        rows[:, i] = (codes >> (i * k)) & mask
    return rows


def one_column_space(r: int, p: int, budget: int = DEFAULT_STATE_BUDGET) -> EnumeratedSpace:
    """Nonzero vectors in F_p^r, coded in base p (coordinate 0 least significant)."""
    check_prime(p)
    if r < 1:
        raise ValueError("need r >= 1")
    total = p**r
    _check_budget(total, budget, f"F_{p}^{r} ambient")
    codes = np.arange(1, total, dtype=np.int64)

    def enc(y: Sequence[int]) -> int:
        c = 0
        for d in reversed(y):
            c = c * p + int(d) % p
        return c

    def dec(c: int) -> tuple[int, ...]:
        out = []
        for _ in range(r):
            out.append(c % p)
            c //= p
        return tuple(out)

    return EnumeratedSpace(codes, enc, dec, description=f"F_{p}^{r} \\ 0")


def heisenberg_tuple_space(
    r: int, p: int, m: int, budget: int = DEFAULT_STATE_BUDGET
) -> EnumeratedSpace:
    """All r-tuples over H(p, m) whose horizontal parts span F_p^{2m}."""
    check_prime(p)
    if p == 2:
        raise ValueError("Heisenberg tuples require odd p")
    h = 2 * m
    hsize = p ** (h + 1)
    ambient = hsize**r
    _check_budget(ambient, budget, f"V_{r}(H({p},{m})) ambient")
    # horizontal matrix of every ambient tuple, (ambient, r, h)
    codes = np.arange(ambient, dtype=np.int64)
    horiz = np.empty((ambient, r, h), dtype=np.int8)
    for i in range(r):
        ci = (codes // (hsize**i)) % hsize
        for d in range(h):
            horiz[:, i, d] = (ci // (p**d)) % p
    ranks = rank_modp_batch(horiz, p)
    keep = np.nonzero(ranks == h)[0].astype(np.int64)
    expected = p**r
    for q in range(h):
        expected *= p**r - p**q
    # the count formula holds for r >= h; for smaller r the space is empty
    if r >= h and keep.shape[0] != expected:
        raise RuntimeError(
            f"tuple enumeration mismatch: got {keep.shape[0]}, formula {expected}"
        )

    def enc(g: Sequence[HeisenbergElement]) -> int:
        c = 0
        for el in reversed(g):
            c = c * hsize + encode_element(el)
        return c

    def dec(c: int) -> tuple[HeisenbergElement, ...]:
        out = []
        for _ in range(r):
            out.append(decode_element(c % hsize, p, m))
            c //= hsize
        return tuple(out)

    return EnumeratedSpace(keep, enc, dec, description=f"V_{r}(H({p},{m}))")


def row_space(k: int) -> EnumeratedSpace:
    """The full fibre alphabet F_2^k (all 2^k rows)."""
    codes = np.arange(1 << k, dtype=np.int64)
    return EnumeratedSpace(codes, encode=lambda u: int(u), decode=lambda c: int(c), description=f"F_2^{k}")


def heisenberg_space(p: int, m: int) -> EnumeratedSpace:
    """The full group H(p, m) as a fibre alphabet, ordered by element code."""
    codes = np.arange(p ** (2 * m + 1), dtype=np.int64)
    return EnumeratedSpace(
        codes,
        encode=encode_element,
        decode=lambda c: decode_element(c, p, m),
        description=f"H({p},{m})",
    )


# ---------------------------------------------------------------------------
# batched exact linear algebra (used by enumeration filters and invariants)
# ---------------------------------------------------------------------------


def rank_bits_batch(rows: np.ndarray, k: int) -> np.ndarray:
    """F_2 rank per instance; rows is (N, n) of packed k-bit row values."""
    work = np.array(rows, dtype=np.int64, copy=True)
    n_inst, n_rows = work.shape
    used = np.zeros_like(work, dtype=bool)
    ranks = np.zeros(n_inst, dtype=np.int64)
    idx = np.arange(n_inst)
    for bit in range(k):
        cand = (((work >> bit) & 1) == 1) & ~used
        has = cand.any(axis=1)
        piv = cand.argmax(axis=1)
        ranks += has
        pivot_vals = np.where(has, work[idx, piv], 0)
        hit = (((work >> bit) & 1) == 1) & has[:, None]
        hit[idx[has], piv[has]] = False
        work ^= np.where(hit, pivot_vals[:, None], 0)
        used[idx[has], piv[has]] = True
    return ranks


def rank_modp_batch(mats: np.ndarray, p: int) -> np.ndarray:
    """Rank mod p per instance; mats is (N, rows, dim) with entries in [0, p)."""
    work = np.array(mats, dtype=np.int64, copy=True) % p
    n_inst, n_rows, dim = work.shape
    inv = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        inv[a] = pow(a, p - 2, p)
    used = np.zeros((n_inst, n_rows), dtype=bool)
    ranks = np.zeros(n_inst, dtype=np.int64)
    idx = np.arange(n_inst)
    for col in range(dim):
        cand = (work[:, :, col] != 0) & ~used
        has = cand.any(axis=1)
        piv = cand.argmax(axis=1)
        ranks += has
        sel = idx[has]
        prow = work[sel, piv[has], :]  # (n_sel, dim)
        prow = (prow * inv[prow[:, col]][:, None]) % p
        work[sel, piv[has], :] = prow
        coeff = work[sel, :, col]  # (n_sel, rows)
        coeff[np.arange(sel.size), piv[has]] = 0
        work[sel] = (work[sel] - coeff[:, :, None] * prow[:, None, :]) % p
        used[sel, piv[has]] = True
    return ranks


# ---------------------------------------------------------------------------
# elementary steps
# ---------------------------------------------------------------------------


def transvection_step(z: Sequence[int], a: int, b: int) -> tuple[int, ...]:
    """Replace row b by row_b + row_a (XOR of packed rows); a must differ from b."""
    n = len(z)
    if not (0 <= a < n and 0 <= b < n) or a == b:
        raise InvalidMove(f"move ({a},{b}) invalid for {n} rows")
    out = list(z)
    out[b] = out[b] ^ out[a]
    return tuple(out)


def one_column_step(y: Sequence[int], i: int, j: int, a: int, p: int) -> tuple[int, ...]:
    """Replace Y_i by Y_i + a Y_j mod p; i must differ from j."""
    r = len(y)
    if not (0 <= i < r and 0 <= j < r) or i == j:
        raise InvalidMove(f"move ({i},{j}) invalid for {r} coordinates")
    out = list(y)
    out[i] = (out[i] + int(a) * out[j]) % p
    return tuple(out)


def pa_pra_step(
    g: Sequence[HeisenbergElement], i: int, j: int, a: int, side: str
) -> tuple[HeisenbergElement, ...]:
    """Replace g_i by g_i g_j^a (side='R') or g_j^a g_i (side='L')."""
    r = len(g)
    if not (0 <= i < r and 0 <= j < r) or i == j:
        raise InvalidMove(f"move ({i},{j}) invalid for {r} coordinates")
    if side not in ("R", "L"):
        raise InvalidMove(f"side must be 'R' or 'L', got {side!r}")
    out = list(g)
    power = h_pow(g[j], a)
    out[i] = h_mul(g[i], power) if side == "R" else h_mul(power, g[i])
    return tuple(out)


# ---------------------------------------------------------------------------
# walk kernels
# ---------------------------------------------------------------------------


class _WalkBase:
    """Shared kernel plumbing: dense matrices, successor lists, simulation."""

    laziness: float
    moves: list

    def _init_laziness(self, laziness: float) -> None:
        if not 0.0 <= laziness < 1.0:
            raise ValueError(f"laziness must lie in [0, 1), got {laziness}")
        self.laziness = float(laziness)

    # subclasses provide: apply_move(state, move), in_omega(state),
    # space(budget), _sample_move(rng), counting_move_bound

    def apply_kernel_row(self, state) -> list[tuple[tuple, float]]:
        """Aggregated successor list [(state', prob)]; probabilities sum to 1."""
        if not self.in_omega(state):
            raise ValueError(f"state {state!r} is outside the walk's state space")
        agg: dict = {}
        w = (1.0 - self.laziness) / len(self.moves)
        for mv in self.moves:
            succ = self.apply_move(state, mv)
            agg[succ] = agg.get(succ, 0.0) + w
        if self.laziness:
            key = tuple(state)
            agg[key] = agg.get(key, 0.0) + self.laziness
        return sorted(agg.items(), key=lambda item: self.state_key(item[0]))

    def state_key(self, state) -> tuple:
        """Total order on states used to sort successor lists."""
        return tuple(state)

    def move_permutations(self, space: EnumeratedSpace) -> np.ndarray:
        """(n_moves, M) successor state indices; every move is a bijection."""
        M = space.size
        out = np.empty((len(self.moves), M), dtype=np.int64)
        states = [space.state_at(i) for i in range(M)]
        for mi, mv in enumerate(self.moves):
            for si, st in enumerate(states):
                out[mi, si] = space.index_of(self.apply_move(st, mv))
        return out

    def dense(self, space: EnumeratedSpace | None = None) -> np.ndarray:
        """Dense transition matrix on the enumerated space."""
        if space is None:
            space = self.space()
        perms = self.move_permutations(space)
        M = space.size
        mat = np.zeros((M, M))
        w = (1.0 - self.laziness) / len(self.moves)
        rows = np.arange(M)
        for mi in range(perms.shape[0]):
            np.add.at(mat, (rows, perms[mi]), w)
        if self.laziness:
            mat[rows, rows] += self.laziness
        return mat

    def simulate(self, start, steps, seed=0, **kw) -> "Trajectory":
        return simulate(self, start, steps, seed=seed, **kw)


class TransvectionWalk(_WalkBase):
    """Row-addition walk on spanning n-tuples of rows in F_2^k."""

    def __init__(self, n: int, k: int, laziness: float = 0.0):
        if n < 2:
            raise ValueError("the walk needs at least two rows (no moves exist for n=1)")
        if k < 1 or n < k:
            raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
        self.n = n
        self.k = k
        self._init_laziness(laziness)
        self.moves = [(a, b) for a in range(n) for b in range(n) if a != b]

    @property
    def counting_move_bound(self) -> int:
        """Distinct one-step outcomes including a hold: 1 + n(n-1)."""
        return 1 + self.n * (self.n - 1)

    def apply_move(self, state, move):
        a, b = move
        return transvection_step(state, a, b)

    def in_omega(self, state) -> bool:
        if len(state) != self.n:
            return False
        mask = (1 << self.k) - 1
        if any(r < 0 or r > mask for r in state):
            return False
        return rank_bits(state, self.k) == self.k

    def space(self, budget: int = DEFAULT_STATE_BUDGET) -> EnumeratedSpace:
        return stiefel_space(self.n, self.k, budget)

    def _sample_move(self, rng: np.random.Generator):
        pair = int(rng.integers(self.n * (self.n - 1)))
        a = pair // (self.n - 1)
        b = pair % (self.n - 1)
        if b >= a:
            b += 1
        return (a, b)


class OneColumnWalk(_WalkBase):
    """Single-column replacement walk on F_p^r minus the origin.

    Over F_2 a move always adds the donor coordinate (the walk is the
    functional projection of TransvectionWalk); over odd p the move draws
    an exponent a uniformly from F_p, so a = 0 holds in place.
    """

    def __init__(self, r: int, p: int, laziness: float = 0.0):
        check_prime(p)
        if r < 2:
            raise ValueError("the walk needs at least two coordinates")
        self.r = r
        self.p = p
        self._init_laziness(laziness)
        if p == 2:
            self.moves = [(i, j) for i in range(r) for j in range(r) if i != j]
        else:
            self.moves = [
                (i, j, a)
                for i in range(r)
                for j in range(r)
                if i != j
                for a in range(p)
            ]

    @property
    def counting_move_bound(self) -> int:
        if self.p == 2:
            return 1 + self.r * (self.r - 1)
        return 1 + self.r * (self.r - 1) * (self.p - 1)

    def apply_move(self, state, move):
        if self.p == 2:
            i, j = move
            a = 1
        else:
            i, j, a = move
        return one_column_step(state, i, j, a, self.p)

    def in_omega(self, state) -> bool:
        return (
            len(state) == self.r
            and all(0 <= y < self.p for y in state)
            and any(y != 0 for y in state)
        )

    def space(self, budget: int = DEFAULT_STATE_BUDGET) -> EnumeratedSpace:
        return one_column_space(self.r, self.p, budget)

    def _sample_move(self, rng: np.random.Generator):
        pair = int(rng.integers(self.r * (self.r - 1)))
        i = pair // (self.r - 1)
        j = pair % (self.r - 1)
        if j >= i:
            j += 1
        if self.p == 2:
            return (i, j)
        return (i, j, int(rng.integers(self.p)))


class PaPraWalk(_WalkBase):
    """Power-averaged product replacement on generating r-tuples of H(p, m)."""

    def __init__(self, r: int, p: int, m: int, laziness: float = 0.0):
        check_prime(p)
        if p == 2:
            raise ValueError("the Heisenberg walk requires odd p")
        if r < 2:
            raise ValueError("the walk needs at least two tuple slots")
        self.r = r
        self.p = p
        self.m = m
        self._init_laziness(laziness)
        self.moves = [
            (i, j, a, side)
            for i in range(r)
            for j in range(r)
            if i != j
            for a in range(p)
            for side in ("R", "L")
        ]

    @property
    def counting_move_bound(self) -> int:
        """1 + 2 p r (r-1), counting every (pair, exponent, side) outcome."""
        return 1 + 2 * self.p * self.r * (self.r - 1)

    def apply_move(self, state, move):
        i, j, a, side = move
        return pa_pra_step(state, i, j, a, side)

    def in_omega(self, state) -> bool:
        return (
            len(state) == self.r
            and all(isinstance(g, HeisenbergElement) for g in state)
            and generates(state)
        )

    def space(self, budget: int = DEFAULT_STATE_BUDGET) -> EnumeratedSpace:
        return heisenberg_tuple_space(self.r, self.p, self.m, budget)

    def state_key(self, state) -> tuple:
        return tuple(encode_element(g) for g in state)

    def _sample_move(self, rng: np.random.Generator):
        pair = int(rng.integers(self.r * (self.r - 1)))
        i = pair // (self.r - 1)
        j = pair % (self.r - 1)
        if j >= i:
            j += 1
        a = int(rng.integers(self.p))
        side = "R" if int(rng.integers(2)) == 0 else "L"
        return (i, j, a, side)


# ---------------------------------------------------------------------------
# fibre kernels
# ---------------------------------------------------------------------------


@dataclass
class FibreKernel:
    """Transition law of one tuple coordinate with the others frozen."""

    kind: str
    i: int
    frozen: tuple
    matrix: np.ndarray
    space: EnumeratedSpace

    def __post_init__(self):
        self.matrix.flags.writeable = False


def build_fibre_kernel(kind: str, i: int, frozen: Sequence, k: int | None = None) -> FibreKernel:
    """Fibre kernel at coordinate i given the frozen coordinates.

    kind='transvection': frozen holds the n-1 packed rows z_j (j != i) and
    k is the row width in bits; the kernel on F_2^k is
    K(u, v) = c_{u xor v} / (n-1) with c_w the number of frozen rows equal
    to w.  kind='heisenberg': frozen holds r-1 HeisenbergElement values and
    the kernel averages left and right translation by g_j^a over all j and
    all exponents a.
    """
    if kind == "transvection":
        if k is None:
            raise ValueError("the transvection fibre needs the row width k")
        n = len(frozen) + 1
        if n < 2:
            raise ValueError("need at least one frozen row")
        size = 1 << k
        counts = np.zeros(size)
        for zj in frozen:
            if not 0 <= int(zj) < size:
                raise ValueError(f"frozen row {zj} outside F_2^{k}")
            counts[int(zj)] += 1
        mat = np.zeros((size, size))
        for u in range(size):
            for w in range(size):
                if counts[w]:
                    mat[u, u ^ w] += counts[w]
        mat /= n - 1
        return FibreKernel("transvection", i, tuple(int(z) for z in frozen), mat, row_space(k))
    if kind in ("heisenberg", "pa_pra"):
        if not frozen:
            raise ValueError("need at least one frozen coordinate")
        g0 = frozen[0]
        p_, m_ = g0.p, g0.h // 2
        space = heisenberg_space(p_, m_)
        size = space.size
        elements = [space.state_at(t) for t in range(size)]
        mat = np.zeros((size, size))
        r1 = len(frozen)
        for gj in frozen:
            for a in range(p_):
                ga = h_pow(gj, a)
                for x_idx, x in enumerate(elements):
                    mat[x_idx, space.index_of(h_mul(x, ga))] += 1.0  # right translation
                    mat[x_idx, space.index_of(h_mul(ga, x))] += 1.0  # left translation
        mat /= 2 * r1 * p_
        return FibreKernel("heisenberg", i, tuple(frozen), mat, space)
    raise ValueError(f"unknown fibre kind {kind!r}")


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Recorded output of one simulated trajectory."""

    seed: int
    traj_id: int
    times: list[int]
    observations: dict[str, list]
    states: list | None = None
    moves: list | None = None


def simulate(
    walk,
    start,
    steps: int,
    seed: int = 0,
    observers: dict[str, Callable] | None = None,
    record_every: int = 1,
    keep_states: bool = False,
    keep_moves: bool = False,
    traj_id: int = 0,
) -> Trajectory:
    """Run one trajectory of `walk` from `start` for `steps` moves.

    The generator is Philox keyed by (seed, traj_id); per step it draws the
    laziness coin (only when laziness > 0), then the ordered pair, then the
    exponent and side where the kernel has them — exactly the kernel's move
    weights.  Observers are evaluated at time 0, at every time divisible by
    record_every, and at the final time.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if not walk.in_omega(start):
        raise ValueError(f"start {start!r} is outside the state space")
    observers = observers or {}
    rng = philox_generator(seed, traj_id)
    state = tuple(start)
    times = [0]
    obs: dict[str, list] = {name: [fn(state)] for name, fn in observers.items()}
    states = [state] if keep_states else None
    moves = [] if keep_moves else None
    for t in range(1, steps + 1):
        lazy = walk.laziness > 0 and rng.random() < walk.laziness
        if lazy:
            mv = None
        else:
            mv = walk._sample_move(rng)
            state = walk.apply_move(state, mv)
        if moves is not None:
            moves.append(mv)
        if t % record_every == 0 or t == steps:
            times.append(t)
            for name, fn in observers.items():
                obs[name].append(fn(state))
            if states is not None:
                states.append(state)
    return Trajectory(seed, traj_id, times, obs, states, moves)


# ---------------------------------------------------------------------------
# batched trajectory engines (vectorised across trials)
# ---------------------------------------------------------------------------


def _sample_pairs(rng: np.random.Generator, count: int, r: int) -> tuple[np.ndarray, np.ndarray]:
    u = rng.integers(0, r * (r - 1), size=count)
    i = u // (r - 1)
    j = u % (r - 1)
    j = j + (j >= i)
    return i.astype(np.int64), j.astype(np.int64)


def one_column_batch(
    r: int,
    p: int,
    trials: int,
    t_grid: Sequence[int],
    seed: int,
    stat_fn: Callable[[int, np.ndarray], None],
    start: np.ndarray | None = None,
    laziness: float = 0.0,
    stream: int = 0,
) -> None:
    """Vectorised one-column trajectories; stat_fn(t, Y) sees (trials, r) states.

    All trials share one Philox stream keyed (seed, stream); per-step draws
    are batched, so the run is deterministic in (seed, stream, trials).
    """
    rng = philox_generator(seed, stream)
    grid = sorted(set(int(t) for t in t_grid))
    if grid and grid[0] < 0:
        raise ValueError("grid times must be nonnegative")
    y = np.zeros((trials, r), dtype=np.uint8)
    if start is None:
        y[:, 0] = 1  # weight-one start
    else:
        y[:] = np.asarray(start, dtype=np.uint8)[None, :]
    t_max = grid[-1] if grid else 0
    gi = 0
    rows = np.arange(trials)
    if gi < len(grid) and grid[gi] == 0:
        stat_fn(0, y)
        gi += 1
    for t in range(1, t_max + 1):
        i, j = _sample_pairs(rng, trials, r)
        if p == 2:
            upd = y[rows, j]
        else:
            a = rng.integers(0, p, size=trials).astype(np.int16)
            upd = (a * y[rows, j].astype(np.int16)) % p
        if laziness > 0:
            act = rng.random(trials) >= laziness
            yi = y[rows, i].astype(np.int16)
            y[rows, i] = np.where(act, (yi + upd) % p, yi).astype(np.uint8)
        else:
            y[rows, i] = ((y[rows, i].astype(np.int16) + upd) % p).astype(np.uint8)
        if gi < len(grid) and grid[gi] == t:
            stat_fn(t, y)
            gi += 1


def transvection_batch(
    n: int,
    k: int,
    trials: int,
    t_grid: Sequence[int],
    seed: int,
    stat_fn: Callable[[int, np.ndarray], None],
    start: np.ndarray,
    laziness: float = 0.0,
    stream: int = 0,
) -> None:
    """Vectorised tuple-walk trajectories on packed rows (trials, n)."""
    rng = philox_generator(seed, stream)
    grid = sorted(set(int(t) for t in t_grid))
    z = np.empty((trials, n), dtype=np.int64)
    z[:] = np.asarray(start, dtype=np.int64)[None, :]
    t_max = grid[-1] if grid else 0
    gi = 0
    rows = np.arange(trials)
    if gi < len(grid) and grid[gi] == 0:
        stat_fn(0, z)
        gi += 1
    for t in range(1, t_max + 1):
        a, b = _sample_pairs(rng, trials, n)
        upd = z[rows, a]
        if laziness > 0:
            act = rng.random(trials) >= laziness
            z[rows, b] = np.where(act, z[rows, b] ^ upd, z[rows, b])
        else:
            z[rows, b] ^= upd
        if gi < len(grid) and grid[gi] == t:
            stat_fn(t, z)
            gi += 1


def pa_pra_batch(
    r: int,
    p: int,
    m: int,
    trials: int,
    t_grid: Sequence[int],
    seed: int,
    stat_fn: Callable[[int, np.ndarray, np.ndarray], None],
    start_v: np.ndarray,
    start_z: np.ndarray,
    laziness: float = 0.0,
    stream: int = 0,
) -> None:
    """Vectorised Heisenberg-tuple trajectories.

    stat_fn(t, V, Z) sees horizontal parts (trials, r, 2m) and central
    coordinates (trials, r).
    """
    rng = philox_generator(seed, stream)
    grid = sorted(set(int(t) for t in t_grid))
    h = 2 * m
    half = (p + 1) // 2
    v = np.empty((trials, r, h), dtype=np.int16)
    v[:] = np.asarray(start_v, dtype=np.int16)[None, :, :]
    z = np.empty((trials, r), dtype=np.int16)
    z[:] = np.asarray(start_z, dtype=np.int16)[None, :]
    t_max = grid[-1] if grid else 0
    gi = 0
    rows = np.arange(trials)
    if gi < len(grid) and grid[gi] == 0:
        stat_fn(0, v, z)
        gi += 1
    for t in range(1, t_max + 1):
        i, j = _sample_pairs(rng, trials, r)
        a = rng.integers(0, p, size=trials).astype(np.int16)
        side = rng.integers(0, 2, size=trials)  # 0 = right, 1 = left
        vi = v[rows, i]  # (trials, h) views are copies via fancy indexing
        vj = v[rows, j]
        # omega(v_i, a v_j) = a * omega(v_i, v_j)
        tw = np.zeros(trials, dtype=np.int64)
        for q in range(m):
            tw += vi[:, 2 * q].astype(np.int64) * vj[:, 2 * q + 1]
            tw -= vi[:, 2 * q + 1].astype(np.int64) * vj[:, 2 * q]
        sign = np.where(side == 0, 1, -1)
        znew = (
            z[rows, i].astype(np.int64)
            + a.astype(np.int64) * z[rows, j]
            + sign * half * a.astype(np.int64) * tw
        ) % p
        vnew = (vi.astype(np.int64) + a[:, None].astype(np.int64) * vj) % p
        if laziness > 0:
            act = rng.random(trials) >= laziness
            z[rows, i] = np.where(act, znew, z[rows, i]).astype(np.int16)
            v[rows, i] = np.where(act[:, None], vnew, vi).astype(np.int16)
        else:
            z[rows, i] = znew.astype(np.int16)
            v[rows, i] = vnew.astype(np.int16)
        if gi < len(grid) and grid[gi] == t:
            stat_fn(t, v, z)
            gi += 1


def connected_components(perms: np.ndarray) -> np.ndarray:
    """Component label per state for the union of the move permutations.

    All kernels here contain each move's inverse, so weak connectivity via
    successor edges equals strong connectivity.
    """
    n_moves, M = perms.shape
    label = np.full(M, -1, dtype=np.int64)
    comp = 0
    for s0 in range(M):
        if label[s0] >= 0:
            continue
        stack = [s0]
        label[s0] = comp
        while stack:
            x = stack.pop()
            for mi in range(n_moves):
                yidx = int(perms[mi, x])
                if label[yidx] < 0:
                    label[yidx] = comp
                    stack.append(yidx)
        comp += 1
    return label
