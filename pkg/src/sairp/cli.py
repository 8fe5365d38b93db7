"""Command-line interface: ``sairp solve | simulate | experiment | compare``.

Every command takes an optional JSON config file (``--config``). Any flag
given on the command line overrides the matching config key. Relative output
directories are resolved under ``$SAIRP_OUTPUT_ROOT`` when that variable is
set. Failures exit nonzero and print a one-line JSON error record to stderr.
The record is also written to ``error.json`` when the output directory
already exists.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .adp import VARIANTS, AdpConfig, GreedyPolicy, ValueApprox, adp_run
from .exact import Policy, SolveOptions, backward_induction, monotone_backward_induction
from .experiments import (
    BaseData,
    ScenarioPoint,
    builtin_lhs40,
    load_base_data,
    load_points_csv,
    load_series_csv,
    scenario_from_point,
)
from .model import ABSORBING, Action, Scenario
from .simulation import (
    action_difference,
    demand_met_fraction,
    gap_over_iterations,
    gap_over_scenarios,
    mean_demand_path,
    optimality_gap,
    replacement_stats,
    sample_demand_paths,
    simulate_policy,
)
from .stepsize import StepsizeSpec
from .tables import build_tables

OUTPUT_ROOT_ENV = "SAIRP_OUTPUT_ROOT"

SCHEMAS = """\
output files (all CSV files have a header row):
  values.csv      t,s1,cap_index,s2,value       value table, t = 1..N; s2 is empty at the absorbing level
  policy.csv      t,s1,cap_index,s2,a1,a2       exact-solver decisions, t = 1..N-1
  trace.csv       iteration,value,alpha         ADP value at (M, top capacity, t=1) after each iteration
  trajectory.csv  path,t,s1,cap_index,s2,a1,a2,demand,satisfied,reward
  gaps.csv        scenario,method,stepsize,gap,seed,iteration_gap   gaps in percent
  convergence/<scenario>.csv  iteration,<method>@<seed>,...        ADP traces per scenario
  run.json, metrics.json, summary.json, compare.json, error.json
cap_index 0 is the absorbing level; index k >= 1 is capacity theta + (k - 1) * epsilon.
docs/schemas.md (schema version 1) describes every file and JSON key.
"""

DEFAULTS: dict[str, Any] = {
    "scenario": "builtin:1",
    "M": 3,
    "T": 48,
    "epsilon": 0.01,
    "theta": 0.8,
    "Phi": None,
    "price_csv": None,
    "demand_csv": None,
    "solver": "bi",
    "probability_mode": "on-demand",
    "stepsize": "harmonic:w=25000",
    "tau": 1000,
    "seed": 0,
    "m_bar": 2,
    "max_iterations": 2,
    "t_bar": None,
    "k": 0.5,
    "paths": 500,
    "mean_demand": False,
    "scenarios": None,
    "methods": ["bi", "mbi:cap"],
    "seeds": [0],
    "baseline": "bi",
    "workers": 1,
    "convergence_stride": 1,
}


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise CliError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS) - {"out", "run", "run_a", "run_b"})
        if unknown:
            raise CliError(f"unknown config keys: {unknown}")
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in ("config", "command", "func") or val is None:
            continue
        cfg[key] = val
    return cfg


def output_dir(cfg: dict[str, Any], default: str) -> Path:
    out = Path(cfg.get("out") or default)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def base_data(cfg: dict[str, Any]) -> BaseData:
    over = {"epsilon": float(cfg["epsilon"]), "theta": float(cfg["theta"]), "M": int(cfg["M"]),
            "horizon": int(cfg["T"]), "Phi": cfg["Phi"]}
    base = load_base_data(**over)
    if cfg.get("price_csv"):
        base = BaseData(**{**base.__dict__, "prices": load_series_csv(cfg["price_csv"], "price")})
    if cfg.get("demand_csv"):
        base = BaseData(**{**base.__dict__, "demand_profile": load_series_csv(cfg["demand_csv"], "demand")})
    return base


def parse_point(spec: str) -> ScenarioPoint:
    """Resolve ``builtin:<id>``, ``point:beta=..,L=..,deltaC=..`` or ``csv:<path>:<id>``."""
    kind, _, rest = spec.partition(":")
    if kind == "builtin":
        try:
            sid = int(rest)
        except ValueError:
            raise CliError(f"bad builtin scenario id in {spec!r}") from None
        points = builtin_lhs40()
        if not 1 <= sid <= len(points):
            raise CliError(f"builtin scenario id must be in 1..{len(points)}, got {sid}")
        return points[sid - 1]
    if kind == "point":
        vals: dict[str, float] = {}
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise CliError(f"bad point field {item!r}")
            vals[key.strip()] = float(val)
        missing = sorted({"beta", "L", "deltaC"} - vals.keys())
        if missing:
            raise CliError(f"point scenario is missing: {', '.join(missing)}")
        return ScenarioPoint(int(vals.get("id", 0)), vals["beta"], vals["L"], vals["deltaC"])
    if kind == "csv":
        path, _, pid = rest.rpartition(":")
        for pt in load_points_csv(path):
            if str(pt.id) == pid:
                return pt
        raise CliError(f"no point with id {pid} in {path}")
    raise CliError(f"unknown scenario source {spec!r}; use builtin:<id>, point:... or csv:<path>:<id>")


def expand_scenarios(spec: Any) -> list[str]:
    if spec is None:
        raise CliError("no scenarios given")
    items = spec if isinstance(spec, list) else [s for s in str(spec).split(";") if s]
    out: list[str] = []
    for item in items:
        kind, _, rest = str(item).partition(":")
        if kind == "builtin" and "-" in rest:
            lo, hi = (int(x) for x in rest.split("-"))
            out.extend(f"builtin:{i}" for i in range(lo, hi + 1))
        else:
            out.append(str(item))
    if not out:
        raise CliError("the scenario list is empty")
    return out


def build_scenario(cfg: dict[str, Any], spec: str | None = None) -> Scenario:
    pt = parse_point(spec or cfg["scenario"])
    sc = scenario_from_point(pt, base_data(cfg), int(cfg["M"]), int(cfg["T"]))
    return sc


@dataclass(frozen=True)
class SolverSpec:
    kind: str  # "exact" or "adp"
    name: str  # bi | mbi | one of VARIANTS
    cap: bool = False

    @property
    def label(self) -> str:
        if self.kind == "adp":
            return f"adp:{self.name}"
        return f"{self.name}:cap" if self.cap else self.name


def parse_solver(text: str) -> SolverSpec:
    kind, _, rest = text.strip().lower().partition(":")
    if kind in ("bi", "mbi"):
        if rest not in ("", "cap"):
            raise CliError(f"bad solver option {rest!r}; only ':cap' is allowed")
        return SolverSpec("exact", kind, rest == "cap")
    if kind == "adp":
        if rest not in VARIANTS:
            raise CliError(f"unknown ADP variant {rest!r}; choose from {', '.join(VARIANTS)}")
        return SolverSpec("adp", rest)
    raise CliError(f"unknown solver {text!r}; use bi[:cap], mbi[:cap] or adp:<variant>")


def adp_config(cfg: dict[str, Any], variant: str, seed: int) -> AdpConfig:
    return AdpConfig(
        variant=variant, tau=int(cfg["tau"]), stepsize=StepsizeSpec.parse(cfg["stepsize"]),
        seed=int(seed), m_bar=int(cfg["m_bar"]), max_iterations=int(cfg["max_iterations"]),
        t_bar=None if cfg["t_bar"] is None else int(cfg["t_bar"]), k=float(cfg["k"]),
    )


def run_exact(sc: Scenario, spec: SolverSpec, cfg: dict[str, Any]):
    opts = SolveOptions(probability_mode=cfg["probability_mode"],
                        replacement_cap_mode="theorem-cap" if spec.cap else "none")
    solver = monotone_backward_induction if spec.name == "mbi" else backward_induction
    return solver(sc, opts)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def fmt(x: float) -> str:
    return repr(float(x))


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _finite(obj: Any) -> Any:
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def json_text(obj: Any) -> str:
    """Stable JSON; NaN and infinities become null."""
    return json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def s2_text(sc: Scenario, cap: int) -> str:
    return "" if cap == ABSORBING else fmt(sc.grid.value(cap))


def values_rows(sc: Scenario, values: np.ndarray):
    for t in range(1, sc.N + 1):
        for s in sc.states():
            yield (t, s.full, s.cap, s2_text(sc, s.cap), fmt(values[t - 1, s.full, s.cap]))


def policy_rows(sc: Scenario, pol: Policy):
    for t in range(1, sc.N):
        for s in sc.states():
            a = pol.decide(t, s)
            yield (t, s.full, s.cap, s2_text(sc, s.cap), a.charge, a.replace)


def read_values_csv(sc: Scenario, path: Path) -> np.ndarray:
    values = np.full((sc.N, sc.M + 1, sc.grid.size), np.nan)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            values[int(row["t"]) - 1, int(row["s1"]), int(row["cap_index"])] = float(row["value"])
    if np.isnan(values).any():
        raise CliError(f"{path} does not cover every epoch and state of the scenario")
    return values


def read_policy_csv(sc: Scenario, path: Path) -> Policy:
    tb = build_tables(sc)
    idx = np.full((sc.T, sc.M + 1, tb.C), -1, dtype=np.int64)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            a = Action(int(row["a1"]), int(row["a2"]))
            idx[int(row["t"]) - 1, int(row["s1"]), int(row["cap_index"])] = tb.action_index(a)
    return Policy(sc, tb, idx)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def scenario_record(cfg: dict[str, Any]) -> dict[str, Any]:
    keys = ("scenario", "M", "T", "epsilon", "theta", "Phi", "price_csv", "demand_csv")
    return {k: cfg[k] for k in keys}


def cmd_solve(cfg: dict[str, Any]) -> int:
    out = output_dir(cfg, "sairp-out/solve")
    sc = build_scenario(cfg)
    spec = parse_solver(cfg["solver"])
    record: dict[str, Any] = {"version": __version__, "command": "solve",
                              "scenario": scenario_record(cfg), "solver": spec.label}
    files: dict[str, str] = {}
    if spec.kind == "exact":
        V, pol = run_exact(sc, spec, cfg)
        values = V.values
        files["policy.csv"] = csv_text(("t", "s1", "cap_index", "s2", "a1", "a2"), policy_rows(sc, pol))
        record["probability_mode"] = cfg["probability_mode"]
    else:
        acfg = adp_config(cfg, spec.name, int(cfg["seed"]))
        approx, trace, _ = adp_run(sc, acfg)
        values = approx.values
        files["trace.csv"] = csv_text(
            ("iteration", "value", "alpha"),
            ((i + 1, fmt(v), fmt(a)) for i, (v, a) in enumerate(zip(trace.values, trace.alphas))),
        )
        record.update(stepsize=acfg.stepsize.label(), tau=acfg.tau, seed=acfg.seed,
                      m_bar=acfg.m_bar, max_iterations=acfg.max_iterations, t_bar=acfg.t_bar, k=acfg.k)
    files["values.csv"] = csv_text(("t", "s1", "cap_index", "s2", "value"), values_rows(sc, values))
    ref = sc.reference_state()
    v1 = float(values[0, ref.full, ref.cap])
    record["reference_state"] = [ref.full, sc.grid.value(ref.cap)]
    record["V1_reference"] = v1
    files["run.json"] = json_text(record)
    for name, text in files.items():
        atomic_write(out / name, text)
    print(f"V1 at (s1={ref.full}, s2={sc.grid.value(ref.cap):g}) = {v1!r}")
    return 0


def load_run(run_dir: Path):
    """Scenario and decision source recorded by a previous ``solve``."""
    meta_path = run_dir / "run.json"
    if not meta_path.exists():
        raise CliError(f"no solve artifact in {run_dir} (missing run.json)")
    meta = json.loads(meta_path.read_text())
    cfg = {**DEFAULTS, **meta["scenario"]}
    sc = build_scenario(cfg)
    spec = parse_solver(meta["solver"])
    if spec.kind == "exact":
        if not (run_dir / "policy.csv").exists():
            raise CliError(f"missing policy.csv in {run_dir}")
        source = read_policy_csv(sc, run_dir / "policy.csv")
    else:
        if not (run_dir / "values.csv").exists():
            raise CliError(f"missing values.csv in {run_dir}")
        source = GreedyPolicy(ValueApprox(sc, read_values_csv(sc, run_dir / "values.csv")))
    return sc, source, meta


def simulate_many(sc: Scenario, source, cfg: dict[str, Any]):
    if cfg["mean_demand"]:
        paths = [mean_demand_path(sc)]
    else:
        if int(cfg["paths"]) < 1:
            raise CliError("paths must be at least 1")
        paths = sample_demand_paths(sc, int(cfg["paths"]), int(cfg["seed"]))
    return [simulate_policy(sc, source, p) for p in paths]


def cmd_simulate(cfg: dict[str, Any]) -> int:
    if not cfg.get("run"):
        raise CliError("simulate needs --run <solve output directory>")
    sc, source, meta = load_run(Path(cfg["run"]))
    out = output_dir(cfg, "sairp-out/simulate")
    trajs = simulate_many(sc, source, cfg)
    rows = []
    for p, tr in enumerate(trajs):
        for i in range(len(tr)):
            rows.append((p, int(tr.t[i]), int(tr.full[i]), int(tr.cap[i]), s2_text(sc, int(tr.cap[i])),
                         int(tr.charge[i]), int(tr.replace[i]), int(tr.demand[i]),
                         int(tr.satisfied[i]), fmt(tr.reward[i])))
    metrics = {
        "solver": meta["solver"],
        "paths": len(trajs),
        "seed": None if cfg["mean_demand"] else int(cfg["seed"]),
        "mean_demand": bool(cfg["mean_demand"]),
        "demand_met_fraction": demand_met_fraction(trajs),
        "mean_total_reward": float(np.mean([tr.total_reward for tr in trajs])),
        **replacement_stats(sc, trajs),
    }
    atomic_write(out / "trajectory.csv", csv_text(
        ("path", "t", "s1", "cap_index", "s2", "a1", "a2", "demand", "satisfied", "reward"), rows))
    atomic_write(out / "metrics.json", json_text(metrics))
    print(json.dumps({"demand_met_fraction": metrics["demand_met_fraction"],
                      "mean_total_reward": metrics["mean_total_reward"]}))
    return 0


def cmd_compare(cfg: dict[str, Any]) -> int:
    if not cfg.get("run_a") or not cfg.get("run_b"):
        raise CliError("compare needs --run-a and --run-b")
    sc_a, src_a, meta_a = load_run(Path(cfg["run_a"]))
    sc_b, src_b, meta_b = load_run(Path(cfg["run_b"]))
    if meta_a["scenario"] != meta_b["scenario"]:
        raise CliError("the two runs were solved for different scenarios")
    out = output_dir(cfg, "sairp-out/compare")
    ta = simulate_many(sc_a, src_a, cfg)
    tb = simulate_many(sc_b, src_b, cfg)
    d_charge, d_replace = action_difference([ta], [tb])
    ra = float(np.mean([t.total_reward for t in ta]))
    rb = float(np.mean([t.total_reward for t in tb]))
    result = {
        "run_a": {"solver": meta_a["solver"], "mean_total_reward": ra, "demand_met_fraction": demand_met_fraction(ta)},
        "run_b": {"solver": meta_b["solver"], "mean_total_reward": rb, "demand_met_fraction": demand_met_fraction(tb)},
        "action_difference_pct": {"charge": d_charge, "replace": d_replace},
        "reward_gap_pct": optimality_gap(ra, rb) if ra != 0 else None,
        "paths": len(ta),
    }
    atomic_write(out / "compare.json", json_text(result))
    print(json.dumps(_finite(result["action_difference_pct"])))
    return 0


def _experiment_scenario(job: tuple[dict[str, Any], str]) -> dict[str, Any]:
    """Solve one scenario with every requested method. Runs in worker processes."""
    cfg, spec_text = job
    res: dict[str, Any] = {"scenario": spec_text, "rows": [], "traces": {}, "error": None}
    try:
        sc = build_scenario(cfg, spec_text)
        base = parse_solver(cfg["baseline"])
        if base.kind != "exact":
            raise CliError("the baseline must be an exact solver")
        v_exact = run_exact(sc, base, cfg)[0].reference_value()
        res["baseline_value"] = v_exact
        stride = max(int(cfg["convergence_stride"]), 1)
        for method in cfg["methods"]:
            spec = parse_solver(method)
            if spec.kind == "exact":
                v = run_exact(sc, spec, cfg)[0].reference_value()
                res["rows"].append((spec.label, "", "", optimality_gap(v_exact, v), None))
                continue
            for seed in cfg["seeds"]:
                acfg = adp_config(cfg, spec.name, int(seed))
                approx, trace, _ = adp_run(sc, acfg)
                res["rows"].append((spec.label, acfg.stepsize.label(), int(seed),
                                    optimality_gap(v_exact, approx.reference_value()),
                                    gap_over_iterations(trace, v_exact)))
                res["traces"][f"{spec.label}@{seed}"] = trace.values[stride - 1 :: stride].tolist()
    except Exception as exc:  # recorded per scenario; the sweep continues
        res["error"] = f"{type(exc).__name__}: {exc}"
    return res


def scenario_label(spec: str) -> str:
    return spec.replace(":", "-").replace("/", "_").replace(",", "_").replace("=", "")


def cmd_experiment(cfg: dict[str, Any]) -> int:
    scenarios = expand_scenarios(cfg["scenarios"] if cfg["scenarios"] is not None else None)
    methods = cfg["methods"]
    if isinstance(methods, str):
        methods = [m for m in methods.split(",") if m]
    cfg = {**cfg, "methods": [parse_solver(m).label for m in methods]}
    if isinstance(cfg["seeds"], (int, str)):
        cfg["seeds"] = [int(s) for s in str(cfg["seeds"]).split(",")]
    parse_solver(cfg["baseline"])
    out = output_dir(cfg, "sairp-out/experiment")
    jobs = [(cfg, s) for s in scenarios]
    workers = int(cfg["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_experiment_scenario, jobs))
    else:
        results = [_experiment_scenario(j) for j in jobs]

    gap_rows = []
    per_method: dict[str, dict[str, list[float]]] = {}
    failures = {}
    stride = max(int(cfg["convergence_stride"]), 1)
    for res in results:
        label = scenario_label(res["scenario"])
        if res["error"]:
            failures[res["scenario"]] = res["error"]
            continue
        for method, step_label, seed, gap, it_gap in res["rows"]:
            gap_rows.append((res["scenario"], method, step_label, f"{gap:.6f}", seed,
                             "" if it_gap is None else f"{it_gap:.6f}"))
            m = per_method.setdefault(method, {"final": [], "iteration": []})
            m["final"].append(gap)
            if it_gap is not None:
                m["iteration"].append(it_gap)
        if res["traces"]:
            keys = list(res["traces"])
            n = len(res["traces"][keys[0]])
            rows = ((stride * (i + 1), *(fmt(res["traces"][k][i]) for k in keys)) for i in range(n))
            atomic_write(out / "convergence" / f"{label}.csv", csv_text(("iteration", *keys), rows))
    atomic_write(out / "gaps.csv", csv_text(
        ("scenario", "method", "stepsize", "gap", "seed", "iteration_gap"), gap_rows))
    summary = {
        "scenarios": scenarios,
        "baseline": cfg["baseline"],
        "methods": {
            m: {
                "mean_gap": gap_over_scenarios(v["final"]),
                "G_bar": gap_over_scenarios(v["iteration"]) if v["iteration"] else None,
                "rows": len(v["final"]),
            }
            for m, v in per_method.items()
        },
        "failures": failures,
    }
    atomic_write(out / "summary.json", json_text(summary))
    print(json.dumps({m: round(v["mean_gap"], 4) for m, v in summary["methods"].items()}))
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--scenario", help="builtin:<1-40>, point:beta=..,L=..,deltaC=.. or csv:<path>:<id>")
    g.add_argument("--M", type=int, help="battery count (default 3)")
    g.add_argument("--T", type=int, help="number of decision epochs (default 48)")
    g.add_argument("--epsilon", type=float, help="capacity grid step (default 0.01)")
    g.add_argument("--theta", type=float, help="replacement threshold (default 0.8)")
    g.add_argument("--Phi", type=int, help="plug-in count (default M)")
    g.add_argument("--price-csv", dest="price_csv", help="hourly prices, columns hour,usd_per_kwh")
    g.add_argument("--demand-csv", dest="demand_csv", help="weekly demand at 7 batteries, columns hour,lambda")


def _adp_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("approximate solvers")
    g.add_argument("--stepsize", help="one-over-n, harmonic:w=.., stc:alpha0=..,mu1=..,mu2=..,zeta=.., adaptive:w=..")
    g.add_argument("--tau", type=int, help="ADP iterations")
    g.add_argument("--m-bar", dest="m_bar", type=int, help="smallest fleet solved for the regression start")
    g.add_argument("--max-iterations", dest="max_iterations", type=int, help="additional fleet sizes for the regression")
    g.add_argument("--t-bar", dest="t_bar", type=int, help="horizon of the regression instances")
    g.add_argument("--k", type=float, help="per-epoch constant of the madp-m start")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sairp", description=__doc__.splitlines()[0], epilog=SCHEMAS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, epilog=SCHEMAS,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="JSON file with default values for any flag")
        p.add_argument("--out", help=f"output directory (relative paths go under ${OUTPUT_ROOT_ENV})")
        return p

    p = add("solve", "solve one scenario and write its value table and policy or trace")
    _scenario_flags(p)
    p.add_argument("--solver", help="bi, bi:cap, mbi, mbi:cap or adp:<avi|avi-rb|madp|madp-m|madp-rb>")
    p.add_argument("--probability-mode", dest="probability_mode", choices=("cached", "on-demand"))
    p.add_argument("--seed", type=int)
    _adp_flags(p)
    p.set_defaults(func=cmd_solve)

    p = add("simulate", "simulate a solved policy over sampled or mean demand")
    p.add_argument("--run", help="directory written by 'solve'")
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mean-demand", dest="mean_demand", action="store_true", default=None)
    p.set_defaults(func=cmd_simulate)

    p = add("experiment", "run methods over many scenarios and report optimality gaps")
    _scenario_flags(p)
    p.add_argument("--scenarios", help="semicolon-separated sources; builtin:1-40 expands to a range")
    p.add_argument("--methods", help="comma-separated solver specs")
    p.add_argument("--baseline", help="exact solver the gaps are measured against (default bi)")
    p.add_argument("--seeds", help="comma-separated ADP seeds")
    p.add_argument("--workers", type=int)
    p.add_argument("--convergence-stride", dest="convergence_stride", type=int)
    p.add_argument("--probability-mode", dest="probability_mode", choices=("cached", "on-demand"))
    _adp_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = add("compare", "compare two solved policies on common demand paths")
    p.add_argument("--run-a", dest="run_a", help="reference solve directory")
    p.add_argument("--run-b", dest="run_b", help="solve directory to compare against the reference")
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mean-demand", dest="mean_demand", action="store_true", default=None)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg: dict[str, Any] = {}
    try:
        cfg = resolve_config(args)
        return int(args.func(cfg))
    except Exception as exc:
        record = {"status": "error", "command": args.command, "error_type": type(exc).__name__,
                  "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        # Only leave error.json next to outputs that already exist, so that
        # validation failures produce no files at all.
        out = output_dir(cfg, cfg["out"]) if cfg.get("out") else None
        if out is not None and out.is_dir():
            try:
                atomic_write(out / "error.json", json_text(record))
            except OSError:
                pass
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
