"""Command-line front end: config parsing, dispatch, machine-readable reports.

Exit codes: 0 success, 1 configuration/usage problem, 2 numerical failure,
3 I/O problem, 4 verification failure (verify command only).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .errors import NumericalError, UsageError
from .extraction import AtomicMeasure
from .gaussmoments import MeasureSpec, moments_of_measure
from .hierarchy import HierarchyConfig, HierarchyReport, run, verify_mixture
from .polyalg import SparsePoly
from .semialg import SemialgebraicSet, from_inequalities, make_box

_MEASURE_KEYS = {
    "gaussian-mixture": {"type", "components"},
    "dirac-mixture": {"type", "atoms"},
    "uniform-interval": {"type", "a", "b"},
    "raw-moments": {"type", "moments"},
    "samples": {"type", "path"},
}

_CONFIG_KEYS = {
    "measure", "set", "metric", "order_min", "order_max", "epsilon",
    "verify_degrees", "tol", "eps_rank", "seed", "max_iter", "y_box",
    "output_dir",
}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise UsageError(f"unknown keys in {where}: {sorted(unknown)}")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise UsageError(f"missing key {key!r} in {where}")
    return obj[key]


def parse_measure(obj) -> MeasureSpec:
    if not isinstance(obj, dict):
        raise UsageError("measure must be an object")
    kind = _require(obj, "type", "measure")
    if kind not in _MEASURE_KEYS:
        raise UsageError(f"unknown measure type {kind!r}")
    _reject_unknown(obj, _MEASURE_KEYS[kind], f"measure ({kind})")
    if kind == "gaussian-mixture":
        comps = []
        for c in _require(obj, "components", "measure"):
            _reject_unknown(c, {"weight", "mean", "std"}, "mixture component")
            comps.append((float(_require(c, "weight", "component")),
                          float(_require(c, "mean", "component")),
                          float(_require(c, "std", "component"))))
        return MeasureSpec.gaussian_mixture(comps)
    if kind == "dirac-mixture":
        atoms = []
        for c in _require(obj, "atoms", "measure"):
            _reject_unknown(c, {"weight", "location"}, "dirac atom")
            atoms.append((float(_require(c, "weight", "atom")),
                          float(_require(c, "location", "atom"))))
        return MeasureSpec.dirac_mixture(atoms)
    if kind == "uniform-interval":
        return MeasureSpec.uniform(float(_require(obj, "a", "measure")),
                                   float(_require(obj, "b", "measure")))
    if kind == "raw-moments":
        return MeasureSpec.raw_moments(_require(obj, "moments", "measure"))
    return MeasureSpec.samples(str(_require(obj, "path", "measure")))


def parse_set(obj) -> SemialgebraicSet:
    if not isinstance(obj, dict):
        raise UsageError("set must be an object")
    kind = _require(obj, "type", "set")
    if kind == "box":
        _reject_unknown(obj, {"type", "mean", "std"}, "set (box)")
        m = _require(obj, "mean", "set")
        s = _require(obj, "std", "set")
        if len(m) != 2 or len(s) != 2:
            raise UsageError("box bounds must be [lo, hi] pairs")
        return make_box(float(m[0]), float(m[1]), float(s[0]), float(s[1]))
    if kind == "inequalities":
        _reject_unknown(obj, {"type", "radius", "polys"}, "set (inequalities)")
        polys = []
        for entry in _require(obj, "polys", "set"):
            _reject_unknown(entry, {"terms"}, "inequality")
            terms = {}
            for t in _require(entry, "terms", "inequality"):
                _reject_unknown(t, {"mean_power", "std_power", "coeff"}, "term")
                key = (int(_require(t, "mean_power", "term")),
                       int(_require(t, "std_power", "term")))
                terms[key] = terms.get(key, 0.0) + float(_require(t, "coeff", "term"))
            polys.append(SparsePoly("ms", terms))
        return from_inequalities(polys, float(_require(obj, "radius", "set")))
    raise UsageError(f"unknown set type {kind!r}")


def parse_config(obj: dict, overrides: dict | None = None) -> HierarchyConfig:
    if not isinstance(obj, dict):
        raise UsageError("config root must be an object")
    _reject_unknown(obj, _CONFIG_KEYS, "config")
    merged = dict(obj)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    mu = parse_measure(_require(merged, "measure", "config"))
    S = parse_set(_require(merged, "set", "config"))
    return HierarchyConfig(
        mu=mu, S=S,
        metric=str(merged.get("metric", "w2")),
        n_min=int(merged.get("order_min", S.n0)),
        n_max=int(merged.get("order_max", 6)),
        epsilon=float(merged.get("epsilon", 1e-5)),
        verify_degrees=int(merged.get("verify_degrees", 8)),
        tol=float(merged.get("tol", 1e-8)),
        eps_rank=float(merged.get("eps_rank", 1e-6)),
        seed=int(merged.get("seed", 0)),
        max_iter=int(merged.get("max_iter", 200)),
        y_box=None if merged.get("y_box") is None else float(merged["y_box"]),
    )


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

def _measure_to_json(m: AtomicMeasure) -> dict:
    out = {
        "atoms": [{"mean": a[0], "std": a[1], "weight": w}
                  for a, w in zip(m.atoms, m.weights)],
    }
    if m.inside_support is not None:
        out["inside_support"] = list(m.inside_support)
    return out


def _measure_from_json(obj: dict) -> AtomicMeasure:
    if "atoms" not in obj:
        raise UsageError("candidate file needs an 'atoms' list")
    atoms, weights = [], []
    for entry in obj["atoms"]:
        _reject_unknown(entry, {"mean", "std", "weight"}, "candidate atom")
        atoms.append((float(_require(entry, "mean", "atom")),
                      float(_require(entry, "std", "atom"))))
        weights.append(float(_require(entry, "weight", "atom")))
    return AtomicMeasure(atoms=tuple(atoms), weights=tuple(weights))


def report_to_json(report: HierarchyReport, config_echo: dict) -> dict:
    records = []
    for r in report.records:
        rec = {
            "n": r.n, "tau": r.tau, "tau_dual": r.tau_dual, "gap": r.gap,
            "status": r.status, "iterations": r.iterations, "seconds": r.seconds,
            "flat": None if r.flatness is None else r.flatness.flat,
            "rank": None if r.flatness is None or not r.flatness.flat else r.flatness.r,
            "rank_low": None if r.flatness is None else r.flatness.rank_low,
            "rank_high": None if r.flatness is None else r.flatness.rank_high,
            "column_discrepancy": r.column_discrepancy,
            "note": r.note,
            "candidate": None if r.candidate is None else _measure_to_json(r.candidate),
            "verification": None if r.verification is None else dataclasses.asdict(r.verification),
        }
        records.append(rec)
    cert = report.certificate
    return {
        "version": __version__,
        "config": config_echo,
        "records": records,
        "certificate": {
            "kind": cert.kind,
            "order": cert.order,
            "tau": cert.tau,
            "measure": None if cert.measure is None else _measure_to_json(cert.measure),
            "verification": None if cert.verification is None
            else dataclasses.asdict(cert.verification),
        },
        "assumptions": report.assumptions,
        "total_seconds": report.total_seconds,
    }


def write_trace_csv(report: HierarchyReport, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["n", "tau_n", "taustar_n", "gap", "status", "flat", "rank"])
        for r in report.records:
            flat = "" if r.flatness is None else str(r.flatness.flat).lower()
            rank = "" if r.flatness is None or not r.flatness.flat else r.flatness.r
            writer.writerow([r.n, f"{r.tau:.17g}", f"{r.tau_dual:.17g}",
                             f"{r.gap:.17g}", r.status, flat, rank])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_moments(args) -> int:
    config = _load_json(args.config)
    if "measure" not in config:
        raise UsageError("config needs a 'measure' section")
    spec = parse_measure(config["measure"])
    degree = args.max_degree
    moms = moments_of_measure(spec, degree)
    print(json.dumps(list(moms.values)))
    return 0


def _run_from_args(args) -> tuple[HierarchyReport, dict]:
    config_obj = _load_json(args.config)
    overrides = {
        "order_max": args.order_max,
        "metric": args.metric,
        "tol": args.tol,
        "eps_rank": args.eps_rank,
        "epsilon": args.epsilon,
        "seed": args.seed,
    }
    config = parse_config(config_obj, overrides)
    report = run(config)
    echo = dict(config_obj)
    echo.update({k: v for k, v in overrides.items() if v is not None})
    return report, echo


def _write_outputs(report: HierarchyReport, echo: dict, out_dir: str | None) -> Path:
    out = Path(out_dir) if out_dir else Path(echo.get("output_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    doc = report_to_json(report, echo)
    with open(out / "report.json", "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")
    write_trace_csv(report, out / "trace.csv")
    return out


def _print_summary(report: HierarchyReport) -> None:
    for note in report.assumptions:
        if "zero standard deviation" in note:
            print(f"warning: {note}", file=sys.stderr)
    for r in report.records:
        flat = "" if r.flatness is None else f"  flat={str(r.flatness.flat).lower()}"
        if r.flatness is not None and r.flatness.flat:
            flat += f" rank={r.flatness.r}"
        print(f"n={r.n}  tau={r.tau:.10e}  dual={r.tau_dual:.10e}  "
              f"status={r.status}{flat}")
    cert = report.certificate
    if cert.kind == "not-mixture":
        print(f"certificate: not a mixture (order {cert.order}, value {cert.tau:.6e})")
    elif cert.kind == "mixture-candidate":
        print(f"certificate: mixture candidate found at order {cert.order}")
    else:
        print("certificate: inconclusive")


def cmd_distance(args) -> int:
    report, echo = _run_from_args(args)
    out = _write_outputs(report, echo, args.out)
    _print_summary(report)
    print(f"report written to {out / 'report.json'}")
    return 0


def cmd_identify(args) -> int:
    report, echo = _run_from_args(args)
    out = _write_outputs(report, echo, args.out)
    _print_summary(report)
    cert = report.certificate
    if cert.kind == "mixture-candidate" and cert.measure is not None:
        with open(out / "candidate.json", "w", encoding="utf-8") as handle:
            json.dump(_measure_to_json(cert.measure), handle, indent=2)
            handle.write("\n")
        print(f"{'mean':>12} {'std':>12} {'weight':>12}")
        for (m, s), w in zip(cert.measure.atoms, cert.measure.weights):
            print(f"{m:12.8f} {s:12.8f} {w:12.8f}")
        ver = cert.verification
        print(f"verification residuals (degrees {ver.degrees[0]}..{ver.degrees[-1]}): "
              f"max {ver.max_residual:.3e} (threshold {ver.threshold:.3e})")
    print(f"report written to {out / 'report.json'}")
    return 0


def cmd_verify(args) -> int:
    config_obj = _load_json(args.config)
    if "measure" not in config_obj:
        raise UsageError("config needs a 'measure' section")
    spec = parse_measure(config_obj["measure"])
    doc = _load_json(args.candidate)
    if isinstance(doc, dict) and "certificate" in doc:
        cert = doc["certificate"]
        if not cert or cert.get("measure") is None:
            raise UsageError("report carries no extracted measure to verify")
        candidate = _measure_from_json(cert["measure"])
        order = args.order if args.order is not None else cert.get("order")
    else:
        candidate = _measure_from_json(doc)
        order = args.order
    if order is None:
        raise UsageError("an --order is required when the candidate file has none")
    result = verify_mixture(spec, candidate, int(order), args.verify_degrees)
    print(json.dumps(dataclasses.asdict(result)))
    return 0 if result.verified else 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gmdist",
        description="Distance from a measure to the closest Gaussian mixture "
                    "via semidefinite moment relaxations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_mom = sub.add_parser("moments", help="print input-measure moments as a JSON array")
    p_mom.add_argument("--config", required=True)
    p_mom.add_argument("--max-degree", type=int, required=True)
    p_mom.set_defaults(fn=cmd_moments)

    for name, fn in (("distance", cmd_distance), ("identify", cmd_identify)):
        p = sub.add_parser(name, help=f"run the relaxation hierarchy ({name})")
        p.add_argument("--config", required=True)
        p.add_argument("--order-max", type=int, dest="order_max")
        p.add_argument("--metric", choices=("w2", "w1"))
        p.add_argument("--tol", type=float)
        p.add_argument("--eps-rank", type=float, dest="eps_rank")
        p.add_argument("--epsilon", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.set_defaults(fn=fn)

    p_ver = sub.add_parser("verify", help="verify a candidate mixture against a measure")
    p_ver.add_argument("--config", required=True)
    p_ver.add_argument("--candidate", required=True)
    p_ver.add_argument("--order", type=int)
    p_ver.add_argument("--verify-degrees", type=int, default=8, dest="verify_degrees")
    p_ver.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
