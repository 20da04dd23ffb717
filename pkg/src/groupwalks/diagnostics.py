"""Character statistics, good sets, and chain diagnostics.

This module measures what the walks of :mod:`groupwalks.chains` actually do:

* character sums ``S_xi`` and kernel-hit counts ``N_xi`` of tuple states,
  and the good sets they define;
* stationary and ambient good-set measure, exactly or by Monte Carlo with
  Wilson confidence intervals;
* burn-in occupancy curves from worst-case-style starts;
* exact total-variation distances, exact mixing times, counting lower
  bounds, and Monte Carlo TV curves for large instances;
* the birth-death analysis of the support-size process of the one-column
  walk: transition probabilities, hitting times, crossing probabilities,
  the rate functions I_p and J_p, and deterministic constant selection.

Boundary comparisons for the transvection good set use exact integers
(``4*|S_xi| <= n``), so membership never depends on floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .algebra import LinearFunctional, check_prime
from .chains import (
    OneColumnWalk,
    PaPraWalk,
    TransvectionWalk,
    one_column_batch,
    pa_pra_batch,
    philox_generator,
    rank_bits_batch,
    rank_modp_batch,
    transvection_batch,
)
from .errors import (
    BudgetError,
    ConfigError,
    DimensionMismatch,
    InvariantError,
)
from .groups import HeisenbergElement

__all__ = [
    "WILSON_Z99",
    "GoodSetSpec",
    "BDParams",
    "RateConstants",
    "s_xi",
    "n_xi",
    "transvection_good_set",
    "heisenberg_good_set",
    "in_good_set",
    "good_mask_rows",
    "good_mask_horizontal",
    "good_set_measure",
    "wilson_interval",
    "canonical_start",
    "burnin_occupancy",
    "tv_exact",
    "mixing_time_exact",
    "worst_tv_curve",
    "tv_counting_lower",
    "bd_probs",
    "bd_rho",
    "bd_hitting_time",
    "bd_crossing_prob",
    "bd_hitting_mc",
    "embedded_crossing_mc",
    "support_transition_frequencies",
    "good_fibre_gap_scan",
    "hyperplane_gap_floor",
    "sample_balanced_frozen_tuples",
    "rate_I",
    "rate_J",
    "select_constants",
    "support_growth_mean_check",
    "mc_tv_curve_one_column",
]

#: two-sided 99% normal quantile used by every Wilson interval here.
WILSON_Z99 = 2.5758293035489004

DEFAULT_FUNCTIONAL_BUDGET = 1 << 20
DEFAULT_DENSE_BUDGET = 4096
_AMBIENT_CHUNK = 1 << 18


# ---------------------------------------------------------------------------
# character statistics


def _xi_code(xi, k: int | None = None) -> int:
    """Packed-bit coefficient pattern of a mod-2 functional.

    Accepts either a LinearFunctional over F_2 or a plain int whose bit i
    is the coefficient of coordinate i.
    """
    if isinstance(xi, LinearFunctional):
        if xi.p != 2:
            raise DimensionMismatch(f"sign statistic needs a mod-2 functional, got p={xi.p}")
        if k is not None and xi.dim != k:
            raise DimensionMismatch(f"functional on {xi.dim} coordinates, rows have {k}")
        return xi.coeffs.bits
    code = int(xi)
    if code < 0:
        raise ConfigError(f"functional code must be nonnegative, got {code}")
    if k is not None and code >> k:
        raise DimensionMismatch(f"functional code {code} does not fit in {k} coordinates")
    return code


def s_xi(z: Sequence, xi, k: int | None = None) -> int:
    """Signed character sum sum_i (-1)^{xi . z_i} over the rows of z.

    Rows are packed bit patterns (ints); ``xi`` is a LinearFunctional over
    F_2 or an int code.  The result lies in [-n, n] and has the parity of n.
    """
    code = _xi_code(xi, k)
    total = 0
    for row in z:
        r = int(row)
        if r < 0 or (k is not None and r >> k):
            raise DimensionMismatch(f"row {r} does not fit in {k} coordinates")
        total += 1 - 2 * ((code & r).bit_count() & 1)
    return total


def n_xi(g: Sequence[HeisenbergElement], xi: LinearFunctional) -> int:
    """Number of coordinates whose horizontal part lies in ker xi."""
    count = 0
    for elem in g:
        if int(xi(elem.v)) == 0:
            count += 1
    return count


# ---------------------------------------------------------------------------
# good sets


@dataclass(frozen=True)
class GoodSetSpec:
    """Which states count as well balanced, for either walk.

    ``transvection``: all nonzero xi over F_2^k satisfy 4*|S_xi| <= n.
    ``heisenberg``:   all nonzero xi over F_p^{2m} satisfy N_xi <= beta0*r.
    """

    kind: str
    n: int
    k: int = 0
    p: int = 2
    m: int = 0
    beta0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("transvection", "heisenberg"):
            raise ConfigError(f"unknown good-set kind {self.kind!r}")
        if self.n < 1:
            raise ConfigError(f"tuple length must be positive, got {self.n}")
        if self.kind == "transvection":
            if self.k < 1:
                raise ConfigError(f"row width must be positive, got {self.k}")
        else:
            check_prime(self.p)
            if self.p == 2:
                raise ConfigError("the balanced-kernel good set needs odd characteristic")
            if self.m < 1:
                raise ConfigError(f"need m >= 1, got {self.m}")
            if not 0.0 < self.beta0 < 1.0:
                raise ConfigError(f"beta0 must lie in (0,1), got {self.beta0}")

    @property
    def h(self) -> int:
        return 2 * self.m

    @property
    def functional_count(self) -> int:
        if self.kind == "transvection":
            return (1 << self.k) - 1
        return self.p**self.h - 1


def transvection_good_set(n: int, k: int) -> GoodSetSpec:
    return GoodSetSpec(kind="transvection", n=n, k=k)


def heisenberg_good_set(r: int, p: int, m: int, beta0: float) -> GoodSetSpec:
    return GoodSetSpec(kind="heisenberg", n=r, p=p, m=m, beta0=beta0)


def _kernel_count_threshold(spec: GoodSetSpec) -> int:
    """Largest integer N_xi still allowed by N_xi <= beta0 * r."""
    return int(math.floor(spec.beta0 * spec.n + 1e-9))


def in_good_set(z: Sequence, spec: GoodSetSpec, budget: int = DEFAULT_FUNCTIONAL_BUDGET) -> bool:
    """Exact good-set membership by enumeration of all nonzero functionals."""
    if spec.functional_count > budget:
        raise BudgetError(
            f"{spec.functional_count} functionals exceed the budget {budget}"
        )
    if len(z) != spec.n:
        raise DimensionMismatch(f"state has {len(z)} rows, spec expects {spec.n}")
    if spec.kind == "transvection":
        for code in range(1, 1 << spec.k):
            if 4 * abs(s_xi(z, code, spec.k)) > spec.n:
                return False
        return True
    limit = _kernel_count_threshold(spec)
    for coeffs in _nonzero_functional_matrix(spec.h, spec.p):
        count = 0
        for elem in z:
            if int(np.dot(coeffs, elem.v.entries)) % spec.p == 0:
                count += 1
        if count > limit:
            return False
    return True


def _nonzero_functional_matrix(h: int, p: int) -> np.ndarray:
    """(p^h - 1, h) array of coefficient rows of all nonzero functionals."""
    codes = np.arange(1, p**h, dtype=np.int64)
    cols = []
    c = codes.copy()
    for _ in range(h):
        cols.append(c % p)
        c //= p
    return np.stack(cols, axis=1)


def good_mask_rows(Z: np.ndarray, spec: GoodSetSpec) -> np.ndarray:
    """Vectorised membership for packed-row states Z of shape (batch, n)."""
    if spec.kind != "transvection":
        raise ConfigError("packed-row membership is the transvection form")
    if Z.shape[1] != spec.n:
        raise DimensionMismatch(f"states have {Z.shape[1]} rows, spec expects {spec.n}")
    codes = np.arange(1, 1 << spec.k, dtype=Z.dtype)
    parity = np.bitwise_count(Z[:, :, None] & codes[None, None, :]).astype(np.int64) & 1
    s_table = spec.n - 2 * parity.sum(axis=1)
    return (4 * np.abs(s_table) <= spec.n).all(axis=1)


def good_mask_horizontal(V: np.ndarray, spec: GoodSetSpec) -> np.ndarray:
    """Vectorised membership from horizontal parts V of shape (batch, r, h)."""
    if spec.kind != "heisenberg":
        raise ConfigError("horizontal-part membership is the balanced-kernel form")
    if V.shape[1] != spec.n or V.shape[2] != spec.h:
        raise DimensionMismatch(
            f"states have shape {V.shape[1:]}, spec expects ({spec.n}, {spec.h})"
        )
    xis = _nonzero_functional_matrix(spec.h, spec.p)  # (nf, h)
    vals = np.tensordot(V.astype(np.int64), xis.T, axes=([2], [0])) % spec.p
    n_table = (vals == 0).sum(axis=1)  # (batch, nf)
    return (n_table <= _kernel_count_threshold(spec)).all(axis=1)


# ---------------------------------------------------------------------------
# good-set measure


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 0 or successes < 0 or successes > trials:
        raise ConfigError(f"bad counts {successes}/{trials}")
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def _ambient_counts_transvection(spec: GoodSetSpec, budget: int) -> tuple[int, int, int, int]:
    """Exact (ambient, ambient_bad, spanning, spanning_bad) by chunked scan."""
    n, k = spec.n, spec.k
    total = 1 << (n * k)
    if total > budget:
        raise BudgetError(f"ambient space of {total} states exceeds the budget {budget}")
    mask = (1 << k) - 1
    shifts = np.arange(n, dtype=np.int64) * k
    amb_bad = span_count = span_bad = 0
    for lo in range(0, total, _AMBIENT_CHUNK):
        codes = np.arange(lo, min(lo + _AMBIENT_CHUNK, total), dtype=np.int64)
        rows = (codes[:, None] >> shifts[None, :]) & mask
        good = good_mask_rows(rows, spec)
        spanning = rank_bits_batch(rows, k) == k
        amb_bad += int((~good).sum())
        span_count += int(spanning.sum())
        span_bad += int((spanning & ~good).sum())
    return total, amb_bad, span_count, span_bad


def _ambient_counts_heisenberg(spec: GoodSetSpec, budget: int) -> tuple[int, int, int, int]:
    r, p, h = spec.n, spec.p, spec.h
    group_order = p ** (h + 1)
    total = group_order**r
    if total > budget:
        raise BudgetError(f"ambient space of {total} states exceeds the budget {budget}")
    amb_bad = span_count = span_bad = 0
    for lo in range(0, total, _AMBIENT_CHUNK):
        codes = np.arange(lo, min(lo + _AMBIENT_CHUNK, total), dtype=np.int64)
        elem = np.empty((len(codes), r), dtype=np.int64)
        c = codes.copy()
        for i in range(r):
            elem[:, i] = c % group_order
            c //= group_order
        V = np.empty((len(codes), r, h), dtype=np.int64)
        e = elem.copy()
        for q in range(h):
            V[:, :, q] = e % p
            e //= p
        good = good_mask_horizontal(V, spec)
        spanning = rank_modp_batch(V, p) == h
        amb_bad += int((~good).sum())
        span_count += int(spanning.sum())
        span_bad += int((spanning & ~good).sum())
    return total, amb_bad, span_count, span_bad


def good_set_measure(
    spec: GoodSetSpec,
    method: str = "exact",
    trials: int = 100_000,
    seed: int = 0,
    budget: int = 1 << 24,
) -> dict:
    """Measure of the bad set under both the ambient and stationary laws.

    ``exact`` scans the full product space (subject to ``budget``) and
    returns exact counts; ``monte_carlo`` samples iid ambient states,
    estimating the stationary law by rejection to the spanning states, and
    reports Wilson 99% intervals.
    """
    if method == "exact":
        if spec.kind == "transvection":
            total, amb_bad, span, span_bad = _ambient_counts_transvection(spec, budget)
        else:
            total, amb_bad, span, span_bad = _ambient_counts_heisenberg(spec, budget)
        return {
            "method": "exact",
            "ambient_size": total,
            "omega_size": span,
            "mu_gc": amb_bad / total,
            "pi_gc": span_bad / span if span else float("nan"),
            "mu_bad_count": amb_bad,
            "pi_bad_count": span_bad,
        }
    if method != "monte_carlo":
        raise ConfigError(f"unknown measure method {method!r}")
    if trials < 1:
        raise ConfigError(f"need at least one trial, got {trials}")
    rng = philox_generator(seed)
    if spec.kind == "transvection":
        rows = rng.integers(0, 1 << spec.k, size=(trials, spec.n)).astype(np.int64)
        good = good_mask_rows(rows, spec)
        spanning = rank_bits_batch(rows, spec.k) == spec.k
    else:
        V = rng.integers(0, spec.p, size=(trials, spec.n, spec.h)).astype(np.int64)
        good = good_mask_horizontal(V, spec)
        spanning = rank_modp_batch(V, spec.p) == spec.h
    amb_bad = int((~good).sum())
    span = int(spanning.sum())
    span_bad = int((spanning & ~good).sum())
    mu_lo, mu_hi = wilson_interval(amb_bad, trials)
    pi_lo, pi_hi = wilson_interval(span_bad, span) if span else (0.0, 1.0)
    return {
        "method": "monte_carlo",
        "mu_trials": trials,
        "pi_trials": span,
        "mu_gc": amb_bad / trials,
        "mu_gc_ci": (mu_lo, mu_hi),
        "pi_gc": span_bad / span if span else float("nan"),
        "pi_gc_ci": (pi_lo, pi_hi),
    }


# ---------------------------------------------------------------------------
# burn-in occupancy


def canonical_start(r: int, p: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal parts and central coordinates of the canonical tuple.

    The first 2m coordinates carry the symplectic basis vectors, the next
    one is the central generator, and the rest are identities.  Requires
    r >= 2m + 1 so the tuple generates.
    """
    h = 2 * m
    if r < h + 1:
        raise ConfigError(f"canonical tuple needs r >= {h + 1}, got {r}")
    start_v = np.zeros((r, h), dtype=np.int64)
    for i in range(h):
        start_v[i, i] = 1
    start_z = np.zeros(r, dtype=np.int64)
    start_z[h] = 1
    return start_v, start_z


def _default_start_rows(n: int, k: int) -> np.ndarray:
    """Lowest-entropy spanning start: the k basis rows, then zero rows."""
    rows = np.zeros(n, dtype=np.int64)
    rows[:k] = 1 << np.arange(k, dtype=np.int64)
    return rows


def burnin_occupancy(
    walk,
    spec: GoodSetSpec,
    t_grid: Sequence[int],
    trials: int,
    seed: int,
    start=None,
    stream: int = 0,
) -> dict:
    """Estimated P(X_t not in G) on a time grid, with Wilson 99% intervals.

    ``walk`` is a TransvectionWalk, OneColumnWalk, or PaPraWalk; its
    laziness is honoured.  Default starts are the worst-case-style states:
    a weight-one vector, the basis-rows tuple, or the canonical tuple.
    """
    grid = sorted(set(int(t) for t in t_grid))
    if trials < 1:
        raise ConfigError(f"need at least one trial, got {trials}")
    failures: dict[int, int] = {}

    if isinstance(walk, OneColumnWalk):
        if walk.p != 2:
            raise ConfigError("occupancy tracking uses the sign statistic, so p = 2")
        if spec.kind != "transvection" or spec.k != 1 or spec.n != walk.r:
            raise ConfigError("good-set spec does not match the walk")

        def stat(t: int, y: np.ndarray) -> None:
            s_val = walk.r - 2 * y.sum(axis=1, dtype=np.int64)
            failures[t] = int((4 * np.abs(s_val) > walk.r).sum())

        one_column_batch(
            walk.r, 2, trials, grid, seed, stat,
            start=start, laziness=walk.laziness, stream=stream,
        )
    elif isinstance(walk, TransvectionWalk):
        if spec.kind != "transvection" or spec.k != walk.k or spec.n != walk.n:
            raise ConfigError("good-set spec does not match the walk")
        rows = _default_start_rows(walk.n, walk.k) if start is None else np.asarray(start)

        def stat(t: int, z: np.ndarray) -> None:
            failures[t] = int((~good_mask_rows(z, spec)).sum())

        transvection_batch(
            walk.n, walk.k, trials, grid, seed, stat,
            start=rows, laziness=walk.laziness, stream=stream,
        )
    elif isinstance(walk, PaPraWalk):
        if spec.kind != "heisenberg" or spec.n != walk.r or spec.p != walk.p or spec.m != walk.m:
            raise ConfigError("good-set spec does not match the walk")
        if start is None:
            start_v, start_z = canonical_start(walk.r, walk.p, walk.m)
        else:
            start_v, start_z = start

        def stat(t: int, v: np.ndarray, z: np.ndarray) -> None:
            failures[t] = int((~good_mask_horizontal(v, spec)).sum())

        pa_pra_batch(
            walk.r, walk.p, walk.m, trials, grid, seed, stat,
            start_v=start_v, start_z=start_z, laziness=walk.laziness, stream=stream,
        )
    else:
        raise ConfigError(f"unsupported walk type {type(walk).__name__}")

    times = np.array(grid, dtype=np.int64)
    fail_counts = np.array([failures[t] for t in grid], dtype=np.int64)
    ci = np.array([wilson_interval(int(c), trials) for c in fail_counts])
    return {
        "times": times,
        "failure": fail_counts / trials,
        "failure_counts": fail_counts,
        "ci_low": ci[:, 0],
        "ci_high": ci[:, 1],
        "trials": trials,
    }


# ---------------------------------------------------------------------------
# total variation: exact values, mixing times, lower bounds


def _weights_of(dist, size: int | None = None) -> np.ndarray:
    w = np.asarray(getattr(dist, "weights", dist), dtype=float)
    if w.ndim != 1:
        raise DimensionMismatch(f"distribution must be a vector, got shape {w.shape}")
    if size is not None and w.size != size:
        raise DimensionMismatch(f"distribution has {w.size} states, expected {size}")
    return w


def tv_exact(d1, d2) -> float:
    """Total variation distance between two probability vectors."""
    a = _weights_of(d1)
    b = _weights_of(d2, a.size)
    for name, w in (("first", a), ("second", b)):
        if (w < -1e-12).any() or abs(w.sum() - 1.0) > 1e-8:
            raise ConfigError(f"{name} argument is not a probability vector")
    return 0.5 * float(np.abs(a - b).sum())


def _matrix_of(kernel) -> np.ndarray:
    mat = np.asarray(getattr(kernel, "matrix", kernel), dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatch(f"kernel must be square, got shape {mat.shape}")
    return mat


def mixing_time_exact(
    kernel,
    epsilon: float = 0.25,
    stationary=None,
    t_max: int = 100_000,
    budget: int = DEFAULT_DENSE_BUDGET,
) -> int:
    """Smallest t with worst-start TV(P^t(x, .), pi) <= epsilon, exactly.

    Every start is tracked at once: the full t-step distribution matrix is
    iterated and the worst row norm evaluated per step.
    """
    P = _matrix_of(kernel)
    M = P.shape[0]
    if M > budget:
        raise BudgetError(f"{M} states exceed the dense mixing budget {budget}")
    if not 0 < epsilon < 1:
        raise ConfigError(f"epsilon must lie in (0,1), got {epsilon}")
    pi = _weights_of(stationary, M) if stationary is not None else np.full(M, 1.0 / M)
    worst0 = 0.5 * float(np.abs(np.eye(M) - pi[None, :]).sum(axis=1).max())
    if worst0 <= epsilon:
        return 0
    A = P.copy()
    for t in range(1, t_max + 1):
        worst = 0.5 * float(np.abs(A - pi[None, :]).sum(axis=1).max())
        if worst <= epsilon:
            return t
        A = A @ P
    raise BudgetError(f"worst-start TV still above {epsilon} after {t_max} steps")


def worst_tv_curve(kernel, t_grid: Sequence[int], stationary=None) -> np.ndarray:
    """Worst-start exact TV at each grid time, by iterating the kernel."""
    P = _matrix_of(kernel)
    M = P.shape[0]
    pi = _weights_of(stationary, M) if stationary is not None else np.full(M, 1.0 / M)
    grid = sorted(set(int(t) for t in t_grid))
    if grid and grid[0] < 0:
        raise ConfigError("grid times must be nonnegative")
    out = {}
    A = np.eye(M)
    t_cur = 0
    for t in grid:
        while t_cur < t:
            A = A @ P
            t_cur += 1
        out[t] = 0.5 * float(np.abs(A - pi[None, :]).sum(axis=1).max())
    return np.array([out[t] for t in grid])


def tv_counting_lower(t: int, move_count: int, omega_size: int) -> float:
    """Support-counting lower bound max(0, 1 - M^t / |Omega|) on worst-start TV."""
    if t < 0:
        raise ConfigError(f"time must be nonnegative, got {t}")
    if move_count < 1 or omega_size < 1:
        raise ConfigError("move count and space size must be positive")
    # Reachable support after t steps has at most M^t states, each of
    # stationary mass 1/|Omega|; compare exactly in integers when feasible.
    if t * math.log(move_count) > math.log(omega_size) + 1.0:
        return 0.0
    reach = move_count**t
    if reach >= omega_size:
        return 0.0
    return 1.0 - reach / omega_size


# ---------------------------------------------------------------------------
# birth-death analysis of the support process


@dataclass(frozen=True)
class BDParams:
    """Parameters of the support-size birth-death chain on {1, ..., r}."""

    r: int
    p: int

    def __post_init__(self):
        check_prime(self.p)
        if self.r < 2:
            raise ConfigError(f"need tuple length r >= 2, got {self.r}")


def bd_probs(s: int, params: BDParams) -> tuple[float, float]:
    """One-step birth and death probabilities (B_s, D_s) at support size s.

    A birth needs a zero recipient, a nonzero donor, and a nonzero
    multiplier; a death needs the unique multiplier cancelling a nonzero
    recipient against a nonzero donor.
    """
    r, p = params.r, params.p
    if not 1 <= s <= r:
        raise ConfigError(f"support size {s} outside [1, {r}]")
    pairs = r * (r - 1)
    birth = (p - 1) / p * s * (r - s) / pairs
    death = s * (s - 1) / (p * pairs)
    return birth, death


def bd_rho(s: int, params: BDParams) -> float:
    """Ratio D_s / B_s = (s-1) / ((p-1)(r-s)), defined for 1 <= s < r."""
    if not 1 <= s < params.r:
        raise ConfigError(f"ratio needs 1 <= s < r, got s={s}, r={params.r}")
    return (s - 1) / ((params.p - 1) * (params.r - s))


def bd_hitting_time(s: int, target: int, params: BDParams) -> float:
    """Expected number of walk steps to first reach support size >= target.

    Uses the one-step ladder recursion d_k = 1/B_k + rho_k d_{k-1} (with
    d_0 = 0 and the empty product equal to 1), then sums the ladder from s.
    """
    r = params.r
    if not 1 <= s <= r or not 1 <= target <= r:
        raise ConfigError(f"levels must lie in [1, {r}], got s={s}, target={target}")
    if s >= target:
        return 0.0
    d_prev = 0.0
    total = 0.0
    for k in range(1, target):
        birth, _ = bd_probs(k, params)
        d_k = 1.0 / birth + (bd_rho(k, params) * d_prev if k > 1 else 0.0)
        if k >= s:
            total += d_k
        d_prev = d_k
    return total


def bd_crossing_prob(s: int, A0: int, A1: int, params: BDParams) -> float:
    """P_s(hit A0 before A1) for the support chain, A0 <= s <= A1.

    Standard ratio of partial products of rho_m; identical for the walk
    and its embedded jump chain since holding does not reorder hits.
    """
    r = params.r
    if not 1 <= A0 < A1 <= r:
        raise ConfigError(f"need 1 <= A0 < A1 <= {r}, got A0={A0}, A1={A1}")
    if not A0 <= s <= A1:
        raise ConfigError(f"start {s} outside [{A0}, {A1}]")
    prods = np.empty(A1 - A0, dtype=float)
    prods[0] = 1.0
    for idx, mlev in enumerate(range(A0 + 1, A1), start=1):
        prods[idx] = prods[idx - 1] * bd_rho(mlev, params)
    denom = float(prods.sum())
    numer = float(prods[s - A0 :].sum())
    return numer / denom


def _bd_tables(params: BDParams) -> tuple[np.ndarray, np.ndarray]:
    birth = np.zeros(params.r + 1)
    death = np.zeros(params.r + 1)
    for s in range(1, params.r + 1):
        birth[s], death[s] = bd_probs(s, params)
    return birth, death


def bd_hitting_mc(
    s: int,
    target: int,
    params: BDParams,
    trials: int,
    seed: int,
    max_steps: int | None = None,
) -> dict:
    """Monte Carlo mean walk steps from s to support >= target."""
    if not 1 <= s <= params.r or not 1 <= target <= params.r:
        raise ConfigError("levels out of range")
    if s >= target:
        return {"mean": 0.0, "sem": 0.0, "trials": trials, "unfinished": 0}
    birth, death = _bd_tables(params)
    if max_steps is None:
        max_steps = int(200 * params.r * math.log(params.r) * params.p) + 1000
    rng = philox_generator(seed)
    state = np.full(trials, s, dtype=np.int64)
    hit_time = np.zeros(trials, dtype=np.int64)
    active = np.ones(trials, dtype=bool)
    for t in range(1, max_steps + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        u = rng.random(idx.size)
        b = birth[state[idx]]
        d = death[state[idx]]
        state[idx] += (u < b).astype(np.int64) - ((u >= b) & (u < b + d)).astype(np.int64)
        reached = state[idx] >= target
        hit_time[idx[reached]] = t
        active[idx[reached]] = False
    unfinished = int(active.sum())
    times = hit_time[~active].astype(float)
    mean = float(times.mean()) if times.size else float("nan")
    sem = float(times.std(ddof=1) / math.sqrt(times.size)) if times.size > 1 else float("nan")
    return {"mean": mean, "sem": sem, "trials": trials, "unfinished": unfinished}


def embedded_crossing_mc(
    s: int,
    A0: int,
    A1: int,
    params: BDParams,
    trials: int,
    seed: int,
    max_jumps: int = 1_000_000,
) -> dict:
    """Monte Carlo estimate of P_s(hit A0 before A1) for the jump chain.

    Holding steps are skipped: at each jump the chain moves up with
    probability B_s/(B_s + D_s), down otherwise.
    """
    if not 1 <= A0 < A1 <= params.r:
        raise ConfigError("bad levels")
    if not A0 <= s <= A1:
        raise ConfigError(f"start {s} outside [{A0}, {A1}]")
    if s == A0:
        return {"estimate": 1.0, "hits": trials, "trials": trials}
    if s == A1:
        return {"estimate": 0.0, "hits": 0, "trials": trials}
    birth, death = _bd_tables(params)
    up_prob = np.zeros(params.r + 1)
    interior = slice(A0, A1 + 1)
    with np.errstate(invalid="ignore"):
        tot = birth + death
        up_prob[interior] = np.where(tot[interior] > 0, birth[interior] / tot[interior], 0.0)
    rng = philox_generator(seed)
    state = np.full(trials, s, dtype=np.int64)
    active = np.ones(trials, dtype=bool)
    hit_low = np.zeros(trials, dtype=bool)
    for _ in range(max_jumps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        u = rng.random(idx.size)
        state[idx] += np.where(u < up_prob[state[idx]], 1, -1)
        low = state[idx] == A0
        high = state[idx] == A1
        hit_low[idx[low]] = True
        active[idx[low | high]] = False
    if active.any():
        raise InvariantError("embedded crossing simulation did not finish")
    hits = int(hit_low.sum())
    return {"estimate": hits / trials, "hits": hits, "trials": trials}


def support_transition_frequencies(
    r: int,
    p: int,
    steps: int,
    seed: int,
    chains: int = 16,
) -> dict:
    """Empirical one-step support transitions of the one-column p-ary walk.

    Runs ``chains`` coupled trajectories from a weight-one start for a
    combined ``steps`` walk steps, tallying (support size, move) pairs where
    the move is a death, hold, or birth.  Returns the (r+1, 3) count table,
    per-size visit counts, and the empirical birth/death frequencies.
    """
    check_prime(p)
    if r < 2 or steps < 1 or chains < 1:
        raise ConfigError("need r >= 2, steps >= 1, chains >= 1")
    rng = philox_generator(seed)
    per_chain = (steps + chains - 1) // chains
    y = np.zeros((chains, r), dtype=np.int16)
    y[:, 0] = 1
    supp = (y != 0).sum(axis=1).astype(np.int64)
    counts = np.zeros((r + 1, 3), dtype=np.int64)
    rows = np.arange(chains)
    for _ in range(per_chain):
        u = rng.integers(0, r * (r - 1), size=chains)
        i = u // (r - 1)
        j = u % (r - 1)
        j = j + (j >= i)
        a = rng.integers(0, p, size=chains).astype(np.int16)
        new_val = (y[rows, i] + a * y[rows, j]) % p
        delta = (new_val != 0).astype(np.int64) - (y[rows, i] != 0).astype(np.int64)
        np.add.at(counts, (supp, delta + 1), 1)
        y[rows, i] = new_val
        supp += delta
    visits = counts.sum(axis=1)
    with np.errstate(invalid="ignore"):
        death_hat = np.where(visits > 0, counts[:, 0] / visits, np.nan)
        birth_hat = np.where(visits > 0, counts[:, 2] / visits, np.nan)
    return {
        "counts": counts,
        "visits": visits,
        "birth_hat": birth_hat,
        "death_hat": death_hat,
        "steps": int(per_chain) * chains,
    }


# ---------------------------------------------------------------------------
# rate functions and constant selection


def rate_I(p: int, beta: float) -> float:
    """Upper-tail rate beta log(beta p) + (1-beta) log((1-beta) p / (p-1)).

    Defined on [1/p, 1]; vanishes at the mean 1/p and rises to log p.
    """
    check_prime(p)
    if not 1.0 / p <= beta <= 1.0:
        raise ConfigError(f"beta must lie in [1/{p}, 1], got {beta}")
    first = beta * math.log(beta * p) if beta > 0 else 0.0
    second = (1 - beta) * math.log((1 - beta) * p / (p - 1)) if beta < 1 else 0.0
    return first + second


def rate_J(p: int, a: float, b: float) -> float:
    """Integral of log((p-1)(1-u)/u) over [a, b], by adaptive quadrature."""
    check_prime(p)
    upper = (p - 1) / p
    if not 0.0 < a <= b <= upper:
        raise ConfigError(f"need 0 < a <= b <= {upper}, got a={a}, b={b}")
    if a == b:
        return 0.0
    val, err = integrate.quad(
        lambda u: math.log((p - 1) * (1 - u) / u), a, b, epsabs=1e-12, epsrel=1e-12, limit=200
    )
    if err > 1e-10:
        raise InvariantError(f"quadrature error {err} above tolerance")
    return float(val)


@dataclass(frozen=True)
class RateConstants:
    """Deterministically selected constants for the kernel-count analysis."""

    p: int
    epsilon: float
    beta0: float
    beta1: float
    alpha0: float
    alpha_star: float
    alpha1: float
    eta0: float
    I_beta0: float
    J_alpha: float


def select_constants(p: int, epsilon: float) -> RateConstants:
    """Pick (beta0, beta1, alpha0, alpha1, eta0) for a given tail exponent.

    beta0 is the smallest grid multiple of 1e-3 in (1/p, 1) whose rate
    exceeds epsilon*log p by at least 1e-6; beta1 = (1 + beta0)/2 and
    alpha0 = 1 - beta0.  alpha1 is then bisected so the area J(alpha0,
    alpha1) sits halfway between epsilon*log p and its maximum J(alpha0,
    alpha_star), and eta0 = (J - epsilon*log p)/3, making the slack
    identity hold with equality.
    """
    check_prime(p)
    if not 0.0 < epsilon < 1.0:
        raise ConfigError(f"epsilon must lie in (0,1), got {epsilon}")
    target = epsilon * math.log(p)
    beta0 = None
    for i in range(int(1000 / p) + 1, 1000):
        beta = i / 1000.0
        if beta <= 1.0 / p:
            continue
        if rate_I(p, beta) > target + 1e-6:
            beta0 = beta
            break
    if beta0 is None:
        raise ConfigError(f"no feasible beta0 on the grid for p={p}, epsilon={epsilon}")
    beta1 = 0.5 * (1.0 + beta0)
    alpha0 = 1.0 - beta0
    alpha_star = (p - 1) / p
    j_full = rate_J(p, alpha0, alpha_star)
    if j_full <= target:
        raise ConfigError("selected beta0 leaves no slack for alpha1")
    j_target = target + 0.5 * (j_full - target)
    lo, hi = alpha0, alpha_star
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate_J(p, alpha0, mid) < j_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    alpha1 = 0.5 * (lo + hi)
    j_alpha = rate_J(p, alpha0, alpha1)
    eta0 = (j_alpha - target) / 3.0
    if eta0 <= 0:
        raise InvariantError("constant selection produced nonpositive slack")
    return RateConstants(
        p=p,
        epsilon=epsilon,
        beta0=beta0,
        beta1=beta1,
        alpha0=alpha0,
        alpha_star=alpha_star,
        alpha1=alpha1,
        eta0=eta0,
        I_beta0=rate_I(p, beta0),
        J_alpha=j_alpha,
    )


def support_growth_mean_check(
    p: int,
    alpha: float,
    r_grid: Sequence[int] = (16, 32, 64, 128),
    trials: int = 2000,
    seed: int = 0,
) -> dict:
    """Monte Carlo growth check of mean support hitting times from s = 1.

    For each r, measures the mean walk steps to reach support >= ceil(alpha
    r), compares with the exact ladder formula, and fits the growth
    exponent of the means against r log r.
    """
    check_prime(p)
    if not 0.0 < alpha < (p - 1) / p:
        raise ConfigError(f"alpha must lie in (0, {(p - 1) / p}), got {alpha}")
    means, sems, formulas, targets, ratios = [], [], [], [], []
    for ri, r in enumerate(r_grid):
        params = BDParams(r=int(r), p=p)
        tgt = max(1, math.ceil(alpha * r))
        targets.append(tgt)
        formulas.append(bd_hitting_time(1, tgt, params))
        if tgt <= 1:
            means.append(0.0)
            sems.append(0.0)
            ratios.append(0.0)
            continue
        res = bd_hitting_mc(1, tgt, params, trials, seed + ri)
        if res["unfinished"]:
            raise InvariantError(f"{res['unfinished']} runs unfinished at r={r}")
        means.append(res["mean"])
        sems.append(res["sem"])
        ratios.append(res["mean"] / (r * math.log(r)))
    pos = [(r, mu) for r, mu in zip(r_grid, means) if mu > 0]
    if len(pos) >= 2:
        xs = np.log([r * math.log(r) for r, _ in pos])
        ys = np.log([mu for _, mu in pos])
        exponent = float(np.polyfit(xs, ys, 1)[0])
    else:
        exponent = float("nan")
    return {
        "p": p,
        "alpha": alpha,
        "r_grid": list(r_grid),
        "targets": targets,
        "means": means,
        "sems": sems,
        "formula": formulas,
        "ratios": ratios,
        "fitted_exponent": exponent,
        "trials": trials,
    }


# ---------------------------------------------------------------------------
# fibre scans and balanced frozen-tuple sampling


def _sign_table(k: int) -> np.ndarray:
    """(2^k, 2^k) table of (-1)^{xi . w} indexed [xi, w]."""
    codes = np.arange(1 << k, dtype=np.int64)
    parity = np.bitwise_count(codes[:, None] & codes[None, :]).astype(np.int64) & 1
    return 1 - 2 * parity


def good_fibre_gap_scan(n: int, k: int) -> dict:
    """Exact spectral gap of every fibre kernel meeting the good set.

    A fibre is determined by the multiset of row values frozen in the other
    n-1 coordinates, so the scan enumerates value compositions rather than
    states.  A fibre meets the good set when adding some row value back
    produces a balanced full state.  Fibre kernels are convolution kernels
    on F_2^k, so their eigenvalues are exactly the sign sums of the frozen
    composition divided by n-1; the gap needs no dense eigensolve.
    """
    if n < 2 or k < 1:
        raise ConfigError("need n >= 2 and k >= 1")
    W = 1 << k
    if W > 4096:
        raise BudgetError(f"row space of {W} values is too large to scan")
    sgn = _sign_table(k)

    def compositions(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    good_fibres = []
    bad_fibres = []
    seen_good: set[tuple[int, ...]] = set()
    all_fibres = list(compositions(n - 1, W))
    for d in all_fibres:
        vec = np.array(d, dtype=np.int64)
        meets = False
        for w in range(W):
            full = vec.copy()
            full[w] += 1
            s_vals = sgn[1:] @ full
            if (4 * np.abs(s_vals) <= n).all():
                meets = True
                break
        eigs = (sgn[1:] @ vec) / (n - 1)
        gap = 1.0 - float(eigs.max())
        if meets:
            seen_good.add(d)
            good_fibres.append(gap)
        else:
            bad_fibres.append(gap)
    good_arr = np.array(good_fibres) if good_fibres else np.empty(0)
    bad_arr = np.array(bad_fibres) if bad_fibres else np.empty(0)
    return {
        "n": n,
        "k": k,
        "fibre_count": len(all_fibres),
        "good_fibre_count": len(good_fibres),
        "min_good_gap": float(good_arr.min()) if good_arr.size else float("nan"),
        "min_bad_gap": float(bad_arr.min()) if bad_arr.size else float("nan"),
        "good_gaps": good_arr,
        "bad_gaps": bad_arr,
    }


def hyperplane_gap_floor(p: int, beta: float) -> float:
    """Uniform fibre-gap floor min(1-beta, ((1-beta)^2/2)(1-p^{-1/2}))."""
    check_prime(p)
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"beta must lie in (0,1), got {beta}")
    return min(1.0 - beta, 0.5 * (1.0 - beta) ** 2 * (1.0 - p**-0.5))


def sample_balanced_frozen_tuples(
    r: int,
    p: int,
    m: int,
    beta: float,
    count: int,
    seed: int,
    max_draws: int = 10_000_000,
) -> dict:
    """Rejection-sample frozen (r-1)-tuples whose horizontal law is balanced.

    The empirical measure of the horizontal parts must give every
    hyperplane ker xi mass at most beta, i.e. at most beta*(r-1) of the
    frozen coordinates may lie in any kernel (the zero vector counts in
    every one).  Returns stacked horizontal parts (count, R, 2m) and
    central parts (count, R) of accepted tuples, plus the acceptance rate.
    """
    check_prime(p)
    if p == 2 or m < 1 or r < 2:
        raise ConfigError("need odd p, m >= 1, r >= 2")
    if not 1.0 / p <= beta < 1.0:
        raise ConfigError(f"balance level beta={beta} must lie in [1/p, 1)")
    R = r - 1
    h = 2 * m
    limit = beta * R + 1e-9
    xis = _nonzero_functional_matrix(h, p)
    rng = philox_generator(seed)
    kept_v, kept_z = [], []
    accepted = drawn = 0
    batch = max(1024, 4 * count)
    while accepted < count:
        if drawn >= max_draws:
            raise BudgetError(
                f"only {accepted}/{count} balanced tuples after {drawn} draws"
            )
        V = rng.integers(0, p, size=(batch, R, h)).astype(np.int64)
        Z = rng.integers(0, p, size=(batch, R)).astype(np.int64)
        drawn += batch
        vals = np.tensordot(V, xis.T, axes=([2], [0])) % p
        n_table = (vals == 0).sum(axis=1)
        ok = (n_table <= limit).all(axis=1)
        idx = np.flatnonzero(ok)
        if idx.size:
            kept_v.append(V[idx])
            kept_z.append(Z[idx])
            accepted += idx.size
    V_out = np.concatenate(kept_v)[:count]
    Z_out = np.concatenate(kept_z)[:count]
    return {
        "V": V_out,
        "Z": Z_out,
        "acceptance": accepted / drawn,
        "draws": drawn,
    }


# ---------------------------------------------------------------------------
# Monte Carlo TV curve for the large one-column walk


def mc_tv_curve_one_column(
    r: int,
    trials: int,
    t_grid: Sequence[int],
    seed: int,
    laziness: float = 0.0,
) -> dict:
    """Plug-in TV curve of the weight statistic for the mod-2 walk.

    The empirical weight histogram at each grid time is compared with the
    exact stationary weight law C(r, w)/(2^r - 1); the projection makes
    this a lower bound on the state-space TV.  Returns the curve and the
    linearly interpolated first crossing of 1/4.
    """
    if r < 2 or trials < 1:
        raise ConfigError("need r >= 2 and at least one trial")
    denom = float(2**r - 1)
    pi_w = np.array([math.comb(r, w) / denom for w in range(r + 1)])
    pi_w[0] = 0.0
    grid = sorted(set(int(t) for t in t_grid))
    tv = {}

    def stat(t: int, y: np.ndarray) -> None:
        weights = y.sum(axis=1, dtype=np.int64)
        hist = np.bincount(weights, minlength=r + 1)
        tv[t] = 0.5 * float(np.abs(hist / trials - pi_w).sum())

    one_column_batch(r, 2, trials, grid, seed, stat, laziness=laziness)
    times = np.array(grid, dtype=np.int64)
    curve = np.array([tv[t] for t in grid])
    crossing = float("nan")
    for idx in range(len(grid)):
        if curve[idx] <= 0.25:
            if idx == 0:
                crossing = float(times[0])
            else:
                t0, t1 = times[idx - 1], times[idx]
                v0, v1 = curve[idx - 1], curve[idx]
                frac = (v0 - 0.25) / (v0 - v1) if v0 > v1 else 1.0
                crossing = float(t0 + frac * (t1 - t0))
            break
    return {"times": times, "tv": curve, "crossing": crossing, "trials": trials}
