"""Command-line front end.

Results go to stdout (JSON by default, CSV with ``--format csv``),
diagnostics to stderr. Exit codes: 0 success, 2 usage error, 3 dimension cap
exceeded. All randomness is derived from the ``--seed`` flag through
per-consumer streams keyed as (seed, n, trial) for merge trials, so repeated
invocations are byte-identical and adding trials never perturbs earlier ones.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from .applications import (
    RateRegion,
    compression_region,
    eoa,
    mac_region,
    side_info_rates,
)
from .core import (
    DEFAULT_DENSITY_CAP,
    DEFAULT_PURE_CAP,
    DimensionCapError,
    PureState,
    stream_rng,
)
from .entropy import EntropyReport, conditional_entropy, subset_entropy
from .merging import (
    CurveRow,
    MergeOutcome,
    MergePlan,
    hadamard_basis,
    monte_carlo_merge,
    plan_merge,
    run_merge,
    run_merge_exhaustive,
)
from .presets import load_channel_file, parse_state

ENV_DIM_CAP = "QMERGE_DIM_CAP"


def _fmt_bits(value: float) -> str:
    if abs(value) < 5e-13:
        value = 0.0
    return f"{value:+.12f}"


def _labels_arg(text: str) -> tuple[str, ...]:
    labels = tuple(l for l in text.split(",") if l)
    if not labels:
        raise argparse.ArgumentTypeError("expected a comma-separated label list")
    return labels


def _rates_arg(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad rate vector {text!r}") from err


def _range_arg(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad range {text!r}, expected n1..n2") from err


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _plan_dict(plan: MergePlan) -> dict:
    return {
        "n": plan.n,
        "block_dim": plan.block_dim,
        "outcome_count": plan.outcome_count,
        "k_boost": plan.k_boost,
        "alice_dim": plan.alice_dim,
        "cond_entropy": plan.cond_entropy,
        "slack_bits": plan.slack_bits,
        "rate_clipped": plan.rate_clipped,
        "predicted_epr_bits": plan.predicted_epr_bits,
        "predicted_cbits": plan.predicted_cbits,
        "target_rate": plan.target_rate,
    }


def _outcome_dict(out: MergeOutcome) -> dict:
    return {
        "outcome_index": out.outcome_index,
        "probability": out.probability,
        "decoupling_error": out.decoupling_error,
        "uhlmann_fidelity": out.uhlmann_fidelity,
        "achieved_fidelity": out.achieved_fidelity,
        "epr_net_bits": out.epr_net_bits,
        "cbits": out.cbits,
    }


_CURVE_FIELDS = (
    "n", "trials", "block_dim", "outcome_count", "k_boost", "epr_net_bits",
    "cbits", "fidelity_mean", "fidelity_median", "fidelity_min",
    "decoupling_mean", "decoupling_median", "decoupling_min", "skipped",
)


def _curve_dict(row: CurveRow) -> dict:
    return {key: _clean(getattr(row, key)) for key in _CURVE_FIELDS}


def _emit_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def _emit(args, json_obj, header, rows) -> str:
    if args.format == "csv":
        return _emit_csv(header, rows)
    return _emit_json(json_obj)


def _pure_cap(args) -> int:
    if args.dim_cap is not None:
        return args.dim_cap
    return int(os.environ.get(ENV_DIM_CAP, DEFAULT_PURE_CAP))


def _load_state(args):
    cap = _pure_cap(args)
    return parse_state(args.state, cap, min(cap, DEFAULT_DENSITY_CAP))


def _require_pure(state, command: str) -> PureState:
    if not isinstance(state, PureState):
        raise ValueError(f"{command} requires a pure state")
    return state


def cmd_entropy(args) -> str:
    state = _load_state(args)
    if args.given:
        value = conditional_entropy(state, args.of, args.given)
    else:
        value = subset_entropy(state, args.of)
    return _fmt_bits(value) + "\n"


def cmd_report(args) -> str:
    state = _load_state(args)
    report = EntropyReport(state)
    labels = report.labels
    entries = []
    for subset in report.subsets(args.max_subset):
        rest = tuple(l for l in labels if l not in set(subset))
        entry = {
            "subset": ",".join(subset),
            "entropy": report.entropy(subset),
            "conditional_on_rest": report.conditional(subset, rest) if rest
            else report.entropy(subset),
        }
        entries.append(entry)
    obj = {
        "labels": list(labels),
        "dims": list(state.layout.dims),
        "subsets": entries,
    }
    rows = [(e["subset"], e["entropy"], e["conditional_on_rest"]) for e in entries]
    return _emit(args, obj, ("subset", "entropy_bits", "conditional_on_rest_bits"), rows)


def cmd_merge(args) -> str:
    state = _require_pure(_load_state(args), "merge")
    cap = _pure_cap(args)
    if args.curve:
        rows = monte_carlo_merge(
            state, range(args.curve[0], args.curve[1] + 1), args.trials,
            args.slack, args.seed, dim_cap=cap,
        )
        dicts = [_curve_dict(r) for r in rows]
        return _emit(args, {"curve": dicts}, _CURVE_FIELDS,
                     [tuple(d.values()) for d in dicts])
    if args.n is None:
        raise ValueError("merge needs -n or --curve")
    plan = plan_merge(state, args.n, args.slack)
    unitary = hadamard_basis(plan.alice_dim) if args.basis == "hadamard" else None
    if args.exhaustive:
        rng = None if unitary is not None else stream_rng(args.seed, args.n, 0)
        outcomes = run_merge_exhaustive(state, plan, rng, unitary=unitary, dim_cap=cap)
    else:
        outcomes = [
            run_merge(state, plan, stream_rng(args.seed, args.n, t),
                      unitary=unitary, dim_cap=cap)
            for t in range(args.trials)
        ]
    plan_d = _plan_dict(plan)
    out_ds = [_outcome_dict(o) for o in outcomes]
    header = tuple(plan_d.keys()) + tuple(out_ds[0].keys())
    rows = [tuple(plan_d.values()) + tuple(d.values()) for d in out_ds]
    return _emit(args, {"plan": plan_d, "outcomes": out_ds}, header, rows)


def _region_dict(region: RateRegion) -> dict:
    obj = {
        "kind": region.kind,
        "parties": list(region.parties),
        "constraints": [
            {"subset": ",".join(c.subset), "bound": c.bound} for c in region.constraints
        ],
    }
    if region.kind == "compression" and len(region.parties) == 2:
        obj["corner_points"] = [list(p) for p in region.corner_points()]
    return obj


def cmd_region(args) -> str:
    state = _load_state(args)
    if args.mac:
        decoder = tuple(l for l in state.layout.labels if l not in ("A", "B"))
        region = mac_region(state, "A", "B", decoder)
    else:
        region = compression_region(state)
    obj = _region_dict(region)
    point_satisfied = {}
    if args.point is not None:
        contained, violated = region.contains(args.point)
        obj["point"] = {
            "rates": list(args.point),
            "contained": contained,
            "violations": [",".join(c.subset) for c in violated],
        }
        point_satisfied = {c.subset: c not in violated for c in region.constraints}
    header = ("subset", "bound") + (("satisfied",) if args.point is not None else ())
    rows = []
    for c in region.constraints:
        row = (",".join(c.subset), c.bound)
        if args.point is not None:
            row += (point_satisfied[c.subset],)
        rows.append(row)
    return _emit(args, obj, header, rows)


def cmd_eoa(args) -> str:
    state = _require_pure(_load_state(args), "eoa")
    result = eoa(state, args.alice, args.bob)
    cuts = [
        {"helpers": ",".join(subset), "value": value}
        for subset, value in result.cut_values.items()
    ]
    obj = {
        "value": result.value,
        "argmin_cut": ",".join(result.argmin_cut),
        "cuts": cuts,
    }
    rows = [(c["helpers"], c["value"]) for c in cuts]
    return _emit(args, obj, ("helpers", "cut_value"), rows)


def cmd_sideinfo(args) -> str:
    state = _require_pure(_load_state(args), "sideinfo")
    channel = load_channel_file(args.channel)
    result = side_info_rates(
        state, channel, restarts=args.restarts, rng=stream_rng(args.seed),
        cap_out=args.cap_out, cap_env=args.cap_env,
    )
    obj = {
        "r_a": result.r_a,
        "r_b": result.r_b,
        "ep": {
            "value": result.ep.value,
            "restarts_used": result.ep.restarts_used,
            "converged": result.ep.converged,
        },
    }
    rows = [(result.r_a, result.r_b, result.ep.value,
             result.ep.restarts_used, result.ep.converged)]
    return _emit(args, obj, ("r_a", "r_b", "ep_value", "ep_restarts", "ep_converged"), rows)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state", required=True,
                        help="preset name or path to a JSON state file")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--dim-cap", type=int, default=None,
                        help=f"pure-state amplitude cap (default {DEFAULT_PURE_CAP}, "
                             f"env {ENV_DIM_CAP})")

    parser = argparse.ArgumentParser(
        prog="qmerge",
        description="Partial quantum information and state-merging simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", parents=[common],
                       help="entropy or conditional entropy in bits")
    p.add_argument("--of", type=_labels_arg, required=True)
    p.add_argument("--given", type=_labels_arg, default=None)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("report", parents=[common], help="all subset entropies")
    p.add_argument("--max-subset", type=int, default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("merge", parents=[common], help="simulate state merging")
    p.add_argument("-n", type=int, default=None, help="number of copies")
    p.add_argument("--slack", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--curve", type=_range_arg, default=None, metavar="N1..N2",
                   help="aggregate trials for each copy count in the range")
    p.add_argument("--exhaustive", action="store_true",
                   help="score every outcome of one measurement basis")
    p.add_argument("--basis", choices=("haar", "hadamard"), default="haar",
                   help="hadamard injects H^n instead of a random basis")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("region", parents=[common], help="rate-region constraints")
    p.add_argument("--mac", action="store_true",
                   help="multiple-access bounds on A,B into decoder C")
    p.add_argument("--point", type=_rates_arg, default=None,
                   help="comma-separated rates to test for membership")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("eoa", parents=[common], help="entanglement of assistance")
    p.add_argument("--alice", type=_labels_arg, default=("A",))
    p.add_argument("--bob", type=_labels_arg, default=("B",))
    p.set_defaults(func=cmd_eoa)

    p = sub.add_parser("sideinfo", parents=[common],
                       help="side-information rate pair for a helper channel")
    p.add_argument("--channel", required=True, help="path to a JSON channel file")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--cap-out", type=int, default=None)
    p.add_argument("--cap-env", type=int, default=None)
    p.set_defaults(func=cmd_sideinfo)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = args.func(args)
    except DimensionCapError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
