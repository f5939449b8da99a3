"""Command-line front end.

Subcommands: ``analyze`` (closed-form metrics for one parameter tuple),
``simulate`` (seeded Monte Carlo run), ``optimize`` (budgeted or
unconstrained sampling design), ``table`` (regenerate a registered reference
table), ``sweep`` (run-length mean over a sampling-probability grid), and
``compare`` (per-policy metric/rate/feasibility rows).

Parameters come from flags, optionally seeded by a flat JSON config file
(flags override the file; unknown config keys are rejected).  Output goes to
stdout or ``--out`` as CSV (12 significant digits) or JSON with a provenance
block.  Exit codes: 0 success, 2 validation error, 3 infeasible or
degenerate model.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from typing import Any, Sequence

from . import __version__
from .metrics import (
    ConsecErrorSpec,
    actuation_error_cost,
    avg_consecutive_error,
    avg_importance_consec,
    metric_report,
    monotone_error_regions,
    reconstruction_error_rate,
    rs_beats_semantics,
    rs_vs_semantics_thresholds,
)
from .model import (
    ChangeAwarePolicy,
    ChannelParams,
    CostWeights,
    DegenerateModelError,
    ParameterError,
    RsPolicy,
    SemanticsAwarePolicy,
    SourceParams,
    SourceParams3,
    UniformPolicy,
    compare_three_state_forms,
    stationary_change_aware,
    stationary_rs,
    stationary_semantics_aware,
    stationary_three_state,
)
from .optimizer import (
    minimize_pe_constrained,
    optimize_constrained,
    optimize_unconstrained,
    sampling_rate,
)
from .sim import SimConfig, simulate
from .tables import TABLE_IDS, build_table

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3


def fmt12(x: float) -> str:
    """Canonical 12-significant-digit rendering used for all CSV numbers."""
    return format(float(x), ".12g")


def _cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt12(v)
    return str(v)


def _write_csv(columns: Sequence[str], rows: Sequence[dict], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])


def _provenance(params: dict, seed: int | None = None) -> dict:
    blob = json.dumps(params, sort_keys=True, default=str).encode()
    prov = {"config_hash": hashlib.sha256(blob).hexdigest()[:16], "version": __version__}
    if seed is not None:
        prov["seed"] = seed
    return prov


def _emit(args, payload: dict | None, columns=None, rows=None, pretty: str | None = None) -> None:
    """Write the report as CSV rows or a JSON document, to --out or stdout."""
    if args.format == "csv":
        buf = io.StringIO()
        _write_csv(columns, rows, buf)
        text = buf.getvalue()
    else:
        doc = dict(payload or {})
        if columns is not None:
            doc["columns"] = list(columns)
            doc["rows"] = [{c: r[c] for c in columns} for r in rows]
        text = json.dumps(doc, indent=2, default=str) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        if pretty:
            print(pretty)
        print(f"wrote {args.format} to {args.out}")
    else:
        sys.stdout.write(text)


def _pretty_table(title: str, columns, rows) -> str:
    """Three-decimal display rendering for eyeballing."""
    def disp(v):
        if isinstance(v, bool):
            return "yes" if v else "no"
        if isinstance(v, float):
            return f"{v:.3f}"
        return str(v)

    cells = [[disp(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
    lines = [title,
             "  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    for row in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Parameter resolution
# ---------------------------------------------------------------------------

_FLOAT_KEYS = {"p", "q", "ps0", "ps1", "ps2", "pa0", "pa1", "pa2", "c01", "c10",
               "eta", "grid_step", "delta"}
_INT_KEYS = {"d", "horizon", "seed", "burn_in", "sim_slots"}
_STR_KEYS = {"policy", "metric", "table_id", "n_list"}
_BOOL_KEYS = {"three_state", "with_sim"}
_ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | _BOOL_KEYS


def _load_config(path: str) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ParameterError("config file must hold a flat JSON object")
    for key in data:
        if key not in _ALL_KEYS:
            raise ParameterError(f"unknown config key {key!r}")
    return data


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then coerce types."""
    cfg = _load_config(args.config) if getattr(args, "config", None) else {}
    for key, raw in cfg.items():
        if getattr(args, key, None) is None:
            if key in _FLOAT_KEYS:
                raw = float(raw)
            elif key in _INT_KEYS:
                raw = int(raw)
            elif key in _BOOL_KEYS:
                raw = bool(raw)
            setattr(args, key, raw)
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise ParameterError(f"missing required parameter: {name.replace('_', '-')}")


def _source(args) -> SourceParams | SourceParams3:
    _require(args, "p", "q")
    if getattr(args, "three_state", False):
        return SourceParams3(args.p, args.q)
    return SourceParams(args.p, args.q)


def _channel(args) -> ChannelParams:
    _require(args, "ps0", "ps1")
    return ChannelParams(args.ps0, args.ps1, getattr(args, "ps2", None))


def _costs(args) -> CostWeights:
    return CostWeights(args.c01 if args.c01 is not None else 1.0,
                       args.c10 if args.c10 is not None else 1.0)


def _policy(args):
    name = args.policy or "rs"
    if name == "rs":
        _require(args, "pa0", "pa1")
        return RsPolicy(args.pa0, args.pa1, getattr(args, "pa2", None))
    if name == "uniform":
        return UniformPolicy(args.d if args.d is not None else 5)
    if name == "change-aware":
        return ChangeAwarePolicy()
    if name == "semantics-aware":
        return SemanticsAwarePolicy()
    raise ParameterError(f"unknown policy {name!r}")


def _model_params(args, *keys) -> dict:
    return {k: getattr(args, k, None) for k in keys if getattr(args, k, None) is not None}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_analyze(args) -> int:
    src = _source(args)
    ch = _channel(args)
    cw = _costs(args)
    params = _model_params(args, "p", "q", "ps0", "ps1", "ps2", "pa0", "pa1", "pa2",
                           "c01", "c10", "three_state")

    if isinstance(src, SourceParams3):
        _require(args, "pa0", "pa1", "pa2", "ps2")
        pol = RsPolicy(args.pa0, args.pa1, args.pa2)
        st = stationary_three_state(src, ch, pol)
        cmp_forms = compare_three_state_forms(src, ch, pol)
        payload = {
            "provenance": _provenance(params),
            "params": params,
            "stationary": [[float(v) for v in row] for row in st.probs],
            "normalization": float(st.probs.sum()),
            "error_rate": reconstruction_error_rate(st),
            "closed_form_check": {
                "max_abs_diff": cmp_forms.max_abs_diff,
                "mismatched": cmp_forms.mismatched,
                "summary": cmp_forms.summary(),
            },
        }
        rows = [{"x": i, "xhat": j, "prob": float(st.probs[i, j])}
                for i in range(3) for j in range(3)]
        _emit(args, payload, columns=("x", "xhat", "prob"), rows=rows)
        return EXIT_OK

    name = args.policy or "rs"
    if name == "rs":
        _require(args, "pa0", "pa1")
        pol = RsPolicy(args.pa0, args.pa1)
        n_values = tuple(int(v) for v in (args.n_list or "0,1,2,5,10").split(","))
        rep = metric_report(src, ch, pol, cw, n_values)
        t1, _ = rs_vs_semantics_thresholds(src, ch, cw)
        mono = monotone_error_regions(src, ch, pol)
        st = stationary_rs(src, ch, pol)
        payload = {
            "provenance": _provenance(params),
            "params": params,
            "policy": "rs",
            "stationary": [[st.pi00, st.pi01], [st.pi10, st.pi11]],
            "metrics": {
                "pe": rep.pe,
                "cost": rep.cost,
                "cbar_e": rep.cbar_e,
                "cbar_s": rep.cbar_s,
                "violation": {str(n): v for n, v in rep.violation.items()},
            },
            "rs_vs_semantics": {
                "pa1_threshold": t1,
                "beats_semantics_here": rs_beats_semantics(src, ch, cw, pol.pa0, pol.pa1),
            },
            "monotone_regions": {
                "pa1_lower_bound": mono.pa1_lower_bound,
                "p_threshold": mono.p_threshold,
                "decreasing_in_p": mono.decreasing_in_p,
                "pa0_lower_bound": mono.pa0_lower_bound,
                "q_threshold": mono.q_threshold,
                "decreasing_in_q": mono.decreasing_in_q,
            },
        }
        rows = [{"metric": "pe", "value": rep.pe},
                {"metric": "cost", "value": rep.cost},
                {"metric": "cbar_e", "value": rep.cbar_e},
                {"metric": "cbar_s", "value": math.nan if rep.cbar_s is None else rep.cbar_s}]
        rows += [{"metric": f"violation_{n}", "value": v} for n, v in rep.violation.items()]
    else:
        pol = _policy(args)
        st = stationary_change_aware(src, ch) if name == "change-aware" \
            else stationary_semantics_aware(src, ch)
        pe = reconstruction_error_rate(st)
        cost = actuation_error_cost(st, cw)
        payload = {
            "provenance": _provenance(params),
            "params": params,
            "policy": name,
            "stationary": [[st.pi00, st.pi01], [st.pi10, st.pi11]],
            "metrics": {"pe": pe, "cost": cost},
        }
        rows = [{"metric": "pe", "value": pe}, {"metric": "cost", "value": cost}]
    _emit(args, payload, columns=("metric", "value"), rows=rows)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    src = _source(args)
    ch = _channel(args)
    cw = _costs(args)
    pol = _policy(args)
    params = _model_params(args, "p", "q", "ps0", "ps1", "ps2", "pa0", "pa1", "pa2",
                           "c01", "c10", "policy", "d", "horizon", "seed", "burn_in",
                           "three_state")
    cfg = SimConfig(source=src, channel=ch, policy=pol, costs=cw,
                    horizon=args.horizon if args.horizon is not None else 1_000_000,
                    seed=args.seed if args.seed is not None else 0,
                    burn_in=args.burn_in if args.burn_in is not None else 10_000)
    rep = simulate(cfg)
    payload = {
        "provenance": _provenance(params, seed=cfg.seed),
        "params": params,
        "horizon": cfg.horizon,
        "burn_in": cfg.burn_in,
        "slots": rep.slots,
        "pe_hat": rep.pe_hat,
        "cost_hat": rep.cost_hat,
        "sampling_rate": rep.sampling_rate,
        "mean_consec_error": rep.mean_consec_error,
        "mean_importance_error": rep.mean_importance_error,
        "consec_hist": {str(k): v for k, v in sorted(rep.consec_hist.items())},
        "importance_hist": {str(k): v for k, v in sorted(rep.importance_hist.items())},
    }
    rows = [{"quantity": "pe_hat", "value": rep.pe_hat},
            {"quantity": "cost_hat", "value": rep.cost_hat},
            {"quantity": "sampling_rate", "value": rep.sampling_rate},
            {"quantity": "mean_consec_error", "value": rep.mean_consec_error},
            {"quantity": "mean_importance_error", "value": rep.mean_importance_error}]
    _emit(args, payload, columns=("quantity", "value"), rows=rows)
    return EXIT_OK


def _cmd_optimize(args) -> int:
    src = _source(args)
    ch = _channel(args)
    params = _model_params(args, "p", "q", "ps0", "ps1", "c01", "c10", "eta", "metric")
    metric = args.metric or ("pe" if args.c01 is None and args.c10 is None else "cost")
    if metric == "pe":
        res = minimize_pe_constrained(src, ch, args.eta if args.eta is not None else 1.0)
    else:
        cw = _costs(args)
        res = (optimize_constrained(src, ch, cw, args.eta)
               if args.eta is not None else optimize_unconstrained(src, ch, cw))
    payload = {
        "provenance": _provenance(params),
        "params": params,
        "objective": metric,
        "pa0_star": res.pa0_star,
        "pa1_star": res.pa1_star,
        "value": res.value,
        "case": res.case_taken.value,
        "sampling_rate": sampling_rate(src, res.pa0_star, res.pa1_star),
        "diagnostics": {
            "branch": res.diagnostics.branch,
            "eta_effective": res.diagnostics.eta_effective,
            "interval": list(res.diagnostics.interval),
            "discriminant": res.diagnostics.discriminant,
            "critical_points": list(res.diagnostics.critical_points),
            "corner": list(res.diagnostics.corner),
            "corner_value": res.diagnostics.corner_value,
            "corner_forced": res.diagnostics.corner_forced,
        },
    }
    rows = [{"quantity": "pa0_star", "value": res.pa0_star},
            {"quantity": "pa1_star", "value": res.pa1_star},
            {"quantity": "value", "value": res.value}]
    _emit(args, payload, columns=("quantity", "value"), rows=rows)
    return EXIT_OK


def _cmd_table(args) -> int:
    _require(args, "table_id")
    result = build_table(args.table_id,
                         sim_slots=args.sim_slots if args.sim_slots is not None else 10_000_000,
                         seed=args.seed if args.seed is not None else 1,
                         d=args.d if args.d is not None else 5)
    payload = {
        "provenance": _provenance({"table_id": result.table_id}),
        "table_id": result.table_id,
        "title": result.title,
        "notes": list(result.notes),
    }
    pretty = _pretty_table(result.title, result.columns, result.rows)
    _emit(args, payload, columns=result.columns, rows=list(result.rows), pretty=pretty)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    src = _source(args)
    ch = _channel(args)
    step = args.grid_step if args.grid_step is not None else 0.05
    if step <= 0:
        raise ParameterError(f"grid-step must be positive, got {step}")
    metric = args.metric or "cbar-e"
    if metric not in ("cbar-e", "cbar-s"):
        raise ParameterError(f"sweep metric must be cbar-e or cbar-s, got {metric!r}")
    n = int(round(1.0 / step))
    grid = [min(1.0, round(i * step, 12)) for i in range(n + 1)]
    rows = []
    for pa0 in grid:
        for pa1 in grid:
            try:
                spec = ConsecErrorSpec.from_params(src, ch, RsPolicy(pa0, pa1))
                value = (avg_consecutive_error(spec) if metric == "cbar-e"
                         else avg_importance_consec(spec))
            except (DegenerateModelError, ParameterError):
                value = math.nan
            rows.append({"pa0": pa0, "pa1": pa1, "value": value})
    params = _model_params(args, "p", "q", "ps0", "ps1", "metric", "grid_step")
    _emit(args, {"provenance": _provenance(params), "params": params, "metric": metric},
          columns=("pa0", "pa1", "value"), rows=rows)
    return EXIT_OK


def _cmd_compare(args) -> int:
    src = _source(args)
    ch = _channel(args)
    cw = _costs(args)
    _require(args, "eta")
    metric = args.metric or "cost"
    if metric not in ("cost", "pe"):
        raise ParameterError(f"compare metric must be cost or pe, got {metric!r}")
    slots = args.sim_slots if args.sim_slots is not None else 1_000_000
    seed = args.seed if args.seed is not None else 1
    d = args.d if args.d is not None else 5
    from .tables import _policy_entries  # same machinery as the comparison tables

    entries = _policy_entries(src, ch, cw, args.eta, metric, slots, seed, d)
    rows = []
    for name in ("semantics_aware", "change_aware", "uniform", "rsc", "rs"):
        rows.append({
            "policy": name,
            metric: entries[name],
            "sampling_rate": entries[f"{name}_rate"],
            "rate_source": entries[f"{name}_rate_source"],
            "feasible": entries[f"{name}_feasible"],
        })
    params = _model_params(args, "p", "q", "ps0", "ps1", "c01", "c10", "eta", "metric")
    _emit(args, {"provenance": _provenance(params, seed=seed), "params": params},
          columns=("policy", metric, "sampling_rate", "rate_source", "feasible"), rows=rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(sp, *, costs=True, policy=False, sim=False, eta=False):
    sp.add_argument("--config", help="flat JSON config file; flags override it")
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--ps0", type=float)
    sp.add_argument("--ps1", type=float)
    sp.add_argument("--ps2", type=float)
    sp.add_argument("--pa0", type=float)
    sp.add_argument("--pa1", type=float)
    sp.add_argument("--pa2", type=float)
    sp.add_argument("--three-state", dest="three_state", action="store_true", default=None)
    if costs:
        sp.add_argument("--c01", type=float)
        sp.add_argument("--c10", type=float)
    if policy:
        sp.add_argument("--policy", choices=("rs", "uniform", "change-aware", "semantics-aware"))
        sp.add_argument("--d", type=int)
    if sim:
        sp.add_argument("--horizon", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--burn-in", dest="burn_in", type=int)
    if eta:
        sp.add_argument("--eta", type=float)
    sp.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="semtrack",
        description="Remote tracking of a Markov source: analysis, simulation, optimization")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("analyze", help="closed-form metrics for one parameter tuple")
    _add_common(sp, policy=True)
    sp.add_argument("--n-list", dest="n_list", help="comma-separated run lengths for tail probabilities")
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    sp.set_defaults(func=_cmd_analyze)

    sp = sub.add_parser("simulate", help="seeded Monte Carlo run")
    _add_common(sp, policy=True, sim=True)
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("optimize", help="optimal sampling probabilities under a budget")
    _add_common(sp, eta=True)
    sp.add_argument("--metric", choices=("cost", "pe"))
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    sp.set_defaults(func=_cmd_optimize)

    sp = sub.add_parser("table", help="regenerate a registered reference table")
    sp.add_argument("--config", help="flat JSON config file; flags override it")
    sp.add_argument("--table-id", dest="table_id", choices=TABLE_IDS)
    sp.add_argument("--sim-slots", dest="sim_slots", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=_cmd_table)

    sp = sub.add_parser("sweep", help="run-length mean over a sampling-probability grid")
    _add_common(sp, costs=False)
    sp.add_argument("--metric", choices=("cbar-e", "cbar-s"))
    sp.add_argument("--grid-step", dest="grid_step", type=float)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("compare", help="per-policy metric, sampling rate, and feasibility")
    _add_common(sp, policy=False, eta=True)
    sp.add_argument("--metric", choices=("cost", "pe"))
    sp.add_argument("--d", type=int)
    sp.add_argument("--sim-slots", dest="sim_slots", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=_cmd_compare)

    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args = _resolve(args)
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DegenerateModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
