"""Command-line experiment harness.

Every analysis in the package is exposed as a subcommand producing
machine-readable output: trajectory CSVs for ``simulate`` and JSON reports
for the rest.  A run is configured by an optional JSON config file plus
flag overrides (flags win), and every artifact is stamped with the seed,
the effective parameter block, and a short hash of it, so reruns with the
same configuration are byte-identical.

Exit codes: 0 success, 1 configuration error, 2 budget refusal, 3 internal
invariant violation.  The environment variable ``GROUPWALKS_THREADS``
limits BLAS thread pools when ``threadpoolctl`` is available.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys

import numpy as np
from scipy import linalg as _sla

from . import spectral
from .algebra import FieldVector
from .chains import (
    OneColumnWalk,
    PaPraWalk,
    TransvectionWalk,
    build_fibre_kernel,
    simulate,
)
from .diagnostics import (
    BDParams,
    bd_crossing_prob,
    bd_hitting_time,
    bd_probs,
    bd_rho,
    canonical_start,
    good_fibre_gap_scan,
    good_mask_rows,
    heisenberg_good_set,
    hyperplane_gap_floor,
    in_good_set,
    mc_tv_curve_one_column,
    mixing_time_exact,
    s_xi,
    sample_balanced_frozen_tuples,
    select_constants,
    transvection_good_set,
    tv_counting_lower,
    worst_tv_curve,
)
from .errors import (
    BudgetError,
    ConfigError,
    GroupwalksError,
    InvariantError,
    ReversibilityError,
)
from .groups import (
    HeisenbergElement,
    Representation,
    fixed_projection,
    heisenberg_elements,
    h_mul,
    operator_norm,
    psi,
    representation_dimension_check,
)

SCHEMA_VERSION = 1
COMMANDS = ("simulate", "spectrum", "mixing", "birthdeath", "repcheck", "pipeline")

_thread_limiter = None  # keeps a threadpoolctl controller alive for the process


def _apply_thread_env() -> None:
    global _thread_limiter
    raw = os.environ.get("GROUPWALKS_THREADS")
    if not raw:
        return
    try:
        count = int(raw)
        if count < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"GROUPWALKS_THREADS must be a positive integer, got {raw!r}")
    try:
        import threadpoolctl
    except ImportError:
        return
    _thread_limiter = threadpoolctl.threadpool_limits(limits=count)


# ---------------------------------------------------------------------------
# configuration plumbing


def _jsonify(obj):
    """Recursively convert numpy scalars and arrays for json.dumps."""
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def config_hash(cfg: dict) -> str:
    """Short content hash of the effective configuration."""
    canon = json.dumps(_jsonify(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def effective_config(command: str, file_cfg: dict, overrides: dict) -> dict:
    """Merge the config-file section with flag overrides; flags win."""
    nested = any(k in COMMANDS and isinstance(v, dict) for k, v in file_cfg.items())
    section = file_cfg.get(command, {}) if nested else file_cfg
    if not isinstance(section, dict):
        raise ConfigError(f"config section {command!r} must be an object")
    merged = dict(section)
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    return merged


def _get(cfg: dict, key: str, default=None, required: bool = False):
    if key in cfg:
        return cfg[key]
    if required:
        raise ConfigError(f"missing required parameter {key!r}")
    return default


def _get_int(cfg, key, default=None, required=False, minimum=None):
    val = _get(cfg, key, default, required)
    if val is None:
        return None
    try:
        ival = int(val)
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {key!r} must be an integer, got {val!r}")
    if minimum is not None and ival < minimum:
        raise ConfigError(f"parameter {key!r} must be >= {minimum}, got {ival}")
    return ival


def _get_float(cfg, key, default=None, required=False):
    val = _get(cfg, key, default, required)
    if val is None:
        return None
    try:
        return float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {key!r} must be a number, got {val!r}")


def _get_grid(cfg, key, default=None):
    val = _get(cfg, key, default)
    if val is None:
        return None
    if not isinstance(val, (list, tuple)):
        raise ConfigError(f"parameter {key!r} must be a list of times")
    return [int(t) for t in val]


def _emit_text(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(command: str, cfg: dict, report: dict, out_path: str | None) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": _jsonify(cfg),
        "config_hash": config_hash(cfg),
        "report": _jsonify(report),
    }
    _emit_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", out_path)


def _emit_csv(command: str, cfg: dict, header: list[str], rows, out_path: str | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    _emit_text(buf.getvalue(), out_path)
    if out_path:
        meta = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": _jsonify(cfg),
            "config_hash": config_hash(cfg),
            "columns": header,
        }
        with open(out_path + ".meta.json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def _fmt(value) -> str:
    """Full-precision, locale-free cell formatting."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


# ---------------------------------------------------------------------------
# walk construction shared by several subcommands


def _build_walk(cfg: dict):
    walk = _get(cfg, "walk", required=True)
    laziness = _get_float(cfg, "laziness", 0.0)
    if walk == "transvection":
        n = _get_int(cfg, "n", required=True, minimum=2)
        k = _get_int(cfg, "k", required=True, minimum=1)
        return TransvectionWalk(n, k, laziness=laziness)
    if walk == "one-column":
        r = _get_int(cfg, "r", required=True, minimum=2)
        p = _get_int(cfg, "p", 2)
        return OneColumnWalk(r, p, laziness=laziness)
    if walk == "pa-pra":
        r = _get_int(cfg, "r", required=True, minimum=2)
        p = _get_int(cfg, "p", required=True, minimum=3)
        m = _get_int(cfg, "m", required=True, minimum=1)
        return PaPraWalk(r, p, m, laziness=laziness)
    raise ConfigError(f"unknown walk {walk!r}; expected transvection, one-column, or pa-pra")


def _default_start(walk):
    if isinstance(walk, TransvectionWalk):
        return tuple(1 << i for i in range(walk.k)) + (0,) * (walk.n - walk.k)
    if isinstance(walk, OneColumnWalk):
        return (1,) + (0,) * (walk.r - 1)
    start_v, start_z = canonical_start(walk.r, walk.p, walk.m)
    return tuple(
        HeisenbergElement(FieldVector(list(start_v[i]), walk.p), int(start_z[i]))
        for i in range(walk.r)
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg: dict, out_path: str | None) -> None:
    walk = _build_walk(cfg)
    steps = _get_int(cfg, "steps", required=True, minimum=0)
    trials = _get_int(cfg, "trials", 1, minimum=1)
    record_every = _get_int(cfg, "record_every", 1, minimum=1)
    seed = _get_int(cfg, "seed", 0)
    start = _default_start(walk)

    if isinstance(walk, (TransvectionWalk, OneColumnWalk)):
        k = walk.k if isinstance(walk, TransvectionWalk) else 1
        n = walk.n if isinstance(walk, TransvectionWalk) else walk.r
        if isinstance(walk, OneColumnWalk) and walk.p != 2:
            spec = None
            header = ["trajectory_id", "step", "support"]
            xi_codes: list[int] = []
        else:
            if (1 << k) - 1 > 256:
                raise BudgetError(f"{(1 << k) - 1} sign columns exceed the CSV budget of 256")
            spec = transvection_good_set(n, k)
            xi_codes = list(range(1, 1 << k))
            header = ["trajectory_id", "step"]
            if isinstance(walk, OneColumnWalk):
                header.append("weight")
            header += [f"s_xi_{c}" for c in xi_codes] + ["in_good"]
    else:
        beta0 = _get_float(cfg, "beta0", 0.75)
        nf = walk.p ** (2 * walk.m) - 1
        if nf > 256:
            raise BudgetError(f"{nf} kernel-count columns exceed the CSV budget of 256")
        spec = heisenberg_good_set(walk.r, walk.p, walk.m, beta0)
        xi_codes = list(range(1, nf + 1))
        header = ["trajectory_id", "step"] + [f"n_xi_{c}" for c in xi_codes]
        header += ["support", "in_good"]

    rows: list[list[str]] = []
    for tid in range(trials):
        if isinstance(walk, PaPraWalk):
            from .diagnostics import _nonzero_functional_matrix

            xis = _nonzero_functional_matrix(2 * walk.m, walk.p)

            def observe(state, _xis=xis):
                vmat = np.array([g.v.entries for g in state], dtype=np.int64)
                vals = (vmat @ _xis.T) % walk.p
                n_table = (vals == 0).sum(axis=0)
                support = int((vmat != 0).any(axis=1).sum())
                good = in_good_set(state, spec)
                return list(n_table) + [support, good]

        elif isinstance(walk, OneColumnWalk) and walk.p != 2:

            def observe(state):
                return [sum(1 for y in state if y)]

        else:

            def observe(state):
                svals = [s_xi(state, c, k) for c in xi_codes]
                good = in_good_set(state, spec)
                out = list(svals) + [good]
                if isinstance(walk, OneColumnWalk):
                    out = [sum(state)] + out
                return out

        traj = simulate(
            walk, start, steps, seed=seed,
            observers={"row": observe}, record_every=record_every, traj_id=tid,
        )
        for t, obs in zip(traj.times, traj.observations["row"]):
            rows.append([_fmt(tid), _fmt(t)] + [_fmt(v) for v in obs])
    _emit_csv("simulate", cfg, header, rows, out_path)


def cmd_spectrum(cfg: dict, out_path: str | None) -> None:
    walk = _build_walk(cfg)
    fibres_only = bool(_get(cfg, "fibres_only", False))
    if fibres_only and not isinstance(walk, PaPraWalk):
        raise ConfigError(
            "fibres_only applies to the group walk, whose ambient space is "
            "too large to enumerate; the other walks report both tables"
        )
    report: dict = {"walk": _get(cfg, "walk")}
    if not fibres_only:
        budget = _get_int(cfg, "state_budget", 1 << 16, minimum=1)
        eig_budget = _get_int(cfg, "eig_budget", 4096, minimum=1)
        space = walk.space(budget=budget)
        if space.size > eig_budget:
            raise BudgetError(
                f"{space.size} states exceed the eigensolve budget {eig_budget}; "
                f"rerun with eig_budget >= {space.size}"
            )
        P = walk.dense(space)
        evs = spectral.spectrum(P)
        report.update({
            "states": space.size,
            "spectral_gap": spectral.spectral_gap(P),
            "eigenvalues_top": [float(v) for v in evs[: min(16, evs.size)]],
            "eigenvalues_bottom": [float(v) for v in evs[-min(4, evs.size):]],
        })
    if isinstance(walk, TransvectionWalk):
        scan = good_fibre_gap_scan(walk.n, walk.k)
        hist, edges = np.histogram(scan["good_gaps"], bins=10, range=(0.0, 2.0))
        report["fibre_scan"] = {
            "fibre_count": scan["fibre_count"],
            "good_fibre_count": scan["good_fibre_count"],
            "min_good_gap": scan["min_good_gap"],
            "min_bad_gap": scan["min_bad_gap"],
            "good_gap_hist_counts": hist,
            "good_gap_hist_edges": edges,
        }
    elif isinstance(walk, PaPraWalk):
        beta = _get_float(cfg, "beta", 0.5)
        fibre_trials = _get_int(cfg, "fibre_trials", 100, minimum=1)
        seed = _get_int(cfg, "seed", 0)
        sample = sample_balanced_frozen_tuples(
            walk.r, walk.p, walk.m, beta, fibre_trials, seed
        )
        gaps = []
        for t in range(fibre_trials):
            elems = tuple(
                HeisenbergElement(
                    FieldVector(list(sample["V"][t][j]), walk.p), int(sample["Z"][t][j])
                )
                for j in range(walk.r - 1)
            )
            fk = build_fibre_kernel("heisenberg", 0, elems)
            gaps.append(spectral.spectral_gap(fk.matrix))
        report["balanced_fibres"] = {
            "beta": beta,
            "trials": fibre_trials,
            "acceptance": sample["acceptance"],
            "min_gap": float(min(gaps)),
            "gap_floor": hyperplane_gap_floor(walk.p, beta),
        }
    _emit_json("spectrum", cfg, report, out_path)


def cmd_mixing(cfg: dict, out_path: str | None) -> None:
    mode = _get(cfg, "mode", "exact")
    if mode == "exact":
        walk = _build_walk(cfg)
        epsilon = _get_float(cfg, "epsilon", 0.25)
        budget = _get_int(cfg, "state_budget", 1 << 16, minimum=1)
        dense_budget = _get_int(cfg, "dense_budget", 4096, minimum=1)
        space = walk.space(budget=budget)
        P = walk.dense(space)
        tau = mixing_time_exact(P, epsilon, budget=dense_budget)
        grid = _get_grid(cfg, "t_grid", list(range(0, tau + 1)))
        curve = worst_tv_curve(P, grid)
        lower = [tv_counting_lower(t, walk.counting_move_bound, space.size) for t in grid]
        report = {
            "mode": "exact",
            "states": space.size,
            "epsilon": epsilon,
            "mixing_time": tau,
            "times": grid,
            "tv": curve,
            "counting_lower": lower,
            "move_bound": walk.counting_move_bound,
        }
    elif mode == "mc":
        r = _get_int(cfg, "r", required=True, minimum=2)
        trials = _get_int(cfg, "trials", 10_000, minimum=1)
        seed = _get_int(cfg, "seed", 0)
        grid = _get_grid(cfg, "t_grid")
        if grid is None:
            t_max = _get_int(cfg, "t_max", int(8 * r * math.log(r)) + 1, minimum=1)
            points = _get_int(cfg, "points", 40, minimum=2)
            grid = sorted(set([0] + [int(x) for x in np.geomspace(1, t_max, points)]))
        curve = mc_tv_curve_one_column(r, trials, grid, seed)
        scale = r * math.log(r)
        walk = OneColumnWalk(r, 2)
        lower = [tv_counting_lower(t, walk.counting_move_bound, 2**r - 1) for t in grid]
        report = {
            "mode": "mc",
            "r": r,
            "trials": trials,
            "times": curve["times"],
            "tv": curve["tv"],
            "counting_lower": lower,
            "crossing_quarter": curve["crossing"],
            "n_log_n": scale,
            "fitted_constant": curve["crossing"] / scale
            if not math.isnan(curve["crossing"])
            else float("nan"),
        }
    else:
        raise ConfigError(f"unknown mixing mode {mode!r}; expected exact or mc")
    _emit_json("mixing", cfg, report, out_path)


def cmd_birthdeath(cfg: dict, out_path: str | None) -> None:
    r = _get_int(cfg, "r", required=True, minimum=2)
    p = _get_int(cfg, "p", required=True, minimum=2)
    params = BDParams(r=r, p=p)
    table = []
    for s in range(1, r + 1):
        birth, death = bd_probs(s, params)
        row = {"s": s, "birth": birth, "death": death, "hold": 1.0 - birth - death}
        if s < r:
            row["rho"] = bd_rho(s, params)
        table.append(row)
    target = _get_int(cfg, "target", r)
    hitting = [
        {"s": s, "expected_steps": bd_hitting_time(s, target, params)}
        for s in range(1, target + 1)
    ]
    report: dict = {"r": r, "p": p, "table": table, "target": target, "hitting": hitting}
    a0 = _get_int(cfg, "A0")
    a1 = _get_int(cfg, "A1")
    if a0 is not None and a1 is not None:
        report["crossing"] = [
            {"s": s, "prob_down_first": bd_crossing_prob(s, a0, a1, params)}
            for s in range(a0, a1 + 1)
        ]
    epsilon = _get_float(cfg, "epsilon")
    if epsilon is not None:
        rc = select_constants(p, epsilon)
        report["constants"] = {
            "epsilon": rc.epsilon,
            "beta0": rc.beta0,
            "beta1": rc.beta1,
            "alpha0": rc.alpha0,
            "alpha_star": rc.alpha_star,
            "alpha1": rc.alpha1,
            "eta0": rc.eta0,
            "I_beta0": rc.I_beta0,
            "J_alpha": rc.J_alpha,
        }
    _emit_json("birthdeath", cfg, report, out_path)


def cmd_repcheck(cfg: dict, out_path: str | None) -> None:
    p = _get_int(cfg, "p", required=True, minimum=3)
    m = _get_int(cfg, "m", 1, minimum=1)
    pair_budget = _get_int(cfg, "pair_budget", 1 << 20, minimum=1)
    order = p ** (2 * m + 1)
    if order * order > pair_budget:
        raise BudgetError(
            f"{order * order} element pairs exceed the pair budget {pair_budget}; "
            f"rerun with pair_budget >= {order * order}"
        )
    elements = list(heisenberg_elements(p, m))
    dim_sq_sum, group_order = representation_dimension_check(p, m)
    blocks = []
    for lam in range(1, p):
        rep = Representation(p, m, lam)
        mats = np.stack([rep.matrix(g) for g in elements])
        d = mats.shape[1]
        # multiplicativity and projective commutation, chunked over the
        # first index to keep the pair tensor small
        idx_of = {g: i for i, g in enumerate(elements)}
        prod_idx = np.array(
            [[idx_of[h_mul(a, b)] for b in elements] for a in elements], dtype=np.int64
        )
        mult_res = 0.0
        comm_res = 0.0
        for i, g in enumerate(elements):
            lhs = mats[i] @ mats  # (N, d, d)
            mult_res = max(
                mult_res, float(np.abs(lhs - mats[prod_idx[i]]).max())
            )
            rhs = mats @ mats[i]  # (N, d, d)
            phases = np.array(
                [
                    psi(lam * int(_omega(g, b)), p)
                    for b in elements
                ]
            )
            comm_res = max(
                comm_res, float(np.abs(lhs - phases[:, None, None] * rhs).max())
            )
        eye = np.eye(d)
        unit_res = float(
            np.abs(np.einsum("nij,nkj->nik", mats, mats.conj()) - eye).max()
        )
        central_res = 0.0
        for z in range(p):
            g = HeisenbergElement(FieldVector([0] * (2 * m), p), z)
            central_res = max(
                central_res,
                float(np.abs(rep.matrix(g) - psi(lam * z, p) * eye).max()),
            )
        # two-projections table over pairs with nonzero symplectic form
        projections = [fixed_projection(mats[i], p) for i in range(len(elements))]
        worst_dev = 0.0
        checked = 0
        target = p ** -0.5
        for i, g in enumerate(elements):
            for j, b in enumerate(elements):
                if i == j or int(_omega(g, b)) == 0:
                    continue
                nrm = operator_norm(projections[i].matrix @ projections[j].matrix)
                worst_dev = max(worst_dev, abs(nrm - target))
                checked += 1
        blocks.append(
            {
                "lambda": lam,
                "dimension": d,
                "mult_residual": mult_res,
                "unitarity_residual": unit_res,
                "central_residual": central_res,
                "projective_commutation_residual": comm_res,
                "two_projection_pairs": checked,
                "two_projection_worst_deviation": worst_dev,
                "two_projection_target": target,
            }
        )
    report = {
        "p": p,
        "m": m,
        "group_order": group_order,
        "dimension_square_sum": dim_sq_sum,
        "dimension_sum_exact": dim_sq_sum == group_order,
        "representations": blocks,
    }
    _emit_json("repcheck", cfg, report, out_path)


def _omega(g: HeisenbergElement, b: HeisenbergElement) -> int:
    from .algebra import SymplecticForm

    return int(SymplecticForm(g.h, g.p).eval(g.v, b.v))


def cmd_pipeline(cfg: dict, out_path: str | None) -> None:
    walk = _build_walk(cfg)
    if not isinstance(walk, TransvectionWalk):
        raise ConfigError("the pipeline subcommand currently drives the tuple walk")
    budget = _get_int(cfg, "state_budget", 1 << 16, minimum=1)
    s_steps = _get_int(cfg, "s", 50, minimum=0)
    L = _get_int(cfg, "L", 30, minimum=1)
    t_star = _get_float(cfg, "t_star", required=True)
    space = walk.space(budget=budget)
    if space.size > 2048:
        raise BudgetError(
            f"{space.size} states exceed the pipeline eigensolve budget 2048"
        )
    P = walk.dense(space)
    spec = transvection_good_set(walk.n, walk.k)
    states = np.array([space.state_at(i) for i in range(space.size)], dtype=np.int64)
    mask = good_mask_rows(states, spec)
    if not mask.any():
        raise ConfigError("the good set is empty for these parameters")
    ext = spectral.ambient_lsi_A_for_good_support(P, mask)
    eta, worst_idx = spectral.worst_exit_probability(P, mask, s_steps, L)
    pi_gc = 1.0 - mask.mean()
    rep = spectral.pipeline_report(
        A=ext["A"],
        omega_size=space.size,
        pi_gc=pi_gc,
        eta=eta,
        L=L,
        t_star=t_star,
    )
    report = rep.to_json_dict()
    report["eta_worst_start"] = int(worst_idx)
    report["burnin_steps"] = s_steps
    report["zero_extension"] = ext
    if _get(cfg, "exact_check", True):
        t_total = rep.t_mix_cont_upper
        if t_total is not None and math.isfinite(t_total):
            hk = _sla.expm(t_total * (P - np.eye(space.size)))
            pi = np.full(space.size, 1.0 / space.size)
            exact_tv = 0.5 * float(np.abs(hk - pi[None, :]).sum(axis=1).max())
            report["exact_tv_at_bound_time"] = exact_tv
            report["tv_bound_dominates"] = bool(rep.tv_bound >= exact_tv - 1e-12)
    _emit_json("pipeline", cfg, report, out_path)


# ---------------------------------------------------------------------------
# parser and entry point


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors map to the config exit code."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="groupwalks", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("simulate", help="trajectory CSV with character statistics")
    common(sp)
    sp.add_argument("--walk", choices=["transvection", "one-column", "pa-pra"])
    sp.add_argument("-n", type=int, default=None)
    sp.add_argument("-k", type=int, default=None)
    sp.add_argument("-r", type=int, default=None)
    sp.add_argument("-p", type=int, default=None)
    sp.add_argument("-m", type=int, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--record-every", dest="record_every", type=int, default=None)
    sp.add_argument("--laziness", type=float, default=None)
    sp.add_argument("--beta0", type=float, default=None)

    sp = sub.add_parser("spectrum", help="gaps and fibre-gap tables (JSON)")
    common(sp)
    sp.add_argument("--walk", choices=["transvection", "one-column", "pa-pra"])
    sp.add_argument("-n", type=int, default=None)
    sp.add_argument("-k", type=int, default=None)
    sp.add_argument("-r", type=int, default=None)
    sp.add_argument("-p", type=int, default=None)
    sp.add_argument("-m", type=int, default=None)
    sp.add_argument("--laziness", type=float, default=None)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--fibre-trials", dest="fibre_trials", type=int, default=None)
    sp.add_argument("--eig-budget", dest="eig_budget", type=int, default=None)
    sp.add_argument(
        "--fibres-only", dest="fibres_only", action="store_true", default=None,
        help="skip the ambient eigensolve and report only the balanced-fibre table",
    )

    sp = sub.add_parser("mixing", help="exact mixing times or MC TV curves (JSON)")
    common(sp)
    sp.add_argument("--mode", choices=["exact", "mc"], default=None)
    sp.add_argument("--walk", choices=["transvection", "one-column", "pa-pra"])
    sp.add_argument("-n", type=int, default=None)
    sp.add_argument("-k", type=int, default=None)
    sp.add_argument("-r", type=int, default=None)
    sp.add_argument("-p", type=int, default=None)
    sp.add_argument("-m", type=int, default=None)
    sp.add_argument("--laziness", type=float, default=None)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--t-max", dest="t_max", type=int, default=None)
    sp.add_argument("--points", type=int, default=None)

    sp = sub.add_parser("birthdeath", help="support-chain tables and constants (JSON)")
    common(sp)
    sp.add_argument("-r", type=int, default=None)
    sp.add_argument("-p", type=int, default=None)
    sp.add_argument("--target", type=int, default=None)
    sp.add_argument("--A0", type=int, default=None)
    sp.add_argument("--A1", type=int, default=None)
    sp.add_argument("--epsilon", type=float, default=None)

    sp = sub.add_parser("repcheck", help="representation axiom residuals (JSON)")
    common(sp)
    sp.add_argument("-p", type=int, default=None)
    sp.add_argument("-m", type=int, default=None)
    sp.add_argument("--pair-budget", dest="pair_budget", type=int, default=None)

    sp = sub.add_parser("pipeline", help="good-set pipeline report (JSON)")
    common(sp)
    sp.add_argument("--walk", choices=["transvection", "one-column", "pa-pra"])
    sp.add_argument("-n", type=int, default=None)
    sp.add_argument("-k", type=int, default=None)
    sp.add_argument("--laziness", type=float, default=None)
    sp.add_argument("-s", type=int, default=None)
    sp.add_argument("-L", type=int, default=None)
    sp.add_argument("--t-star", dest="t_star", type=float, default=None)

    return parser


_DISPATCH = {
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "mixing": cmd_mixing,
    "birthdeath": cmd_birthdeath,
    "repcheck": cmd_repcheck,
    "pipeline": cmd_pipeline,
}

_NON_CONFIG_KEYS = {"command", "config", "out"}


def main(argv=None) -> int:
    try:
        _apply_thread_env()
        parser = build_parser()
        args = parser.parse_args(argv)
        overrides = {
            key: val
            for key, val in vars(args).items()
            if key not in _NON_CONFIG_KEYS
        }
        file_cfg = load_config_file(args.config) if args.config else {}
        cfg = effective_config(args.command, file_cfg, overrides)
        _DISPATCH[args.command](cfg, args.out)
        return 0
    except BudgetError as exc:
        print(f"budget refusal: {exc}", file=sys.stderr)
        return 2
    except (InvariantError, ReversibilityError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, GroupwalksError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
