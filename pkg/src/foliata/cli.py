"""Scenario runner: ``python -m foliata run --scenario p0_identity_check.json``.

A scenario is a JSON file naming a presentation (preset or file), a task and
its options, and a seed. Every run writes ``report.json`` (deterministic for
fixed scenario, seed and thread count) and ``meta.json`` (timestamps).

Exit codes: 0 success, 2 validation failure, 3 numerical error, 4 bad input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analysis, cohomology, flow, gauge, io
from .errors import BranchCutError, EquivarianceError, PerturbationError
from .presentation import preset, validate

TASKS = ("validate", "cohomology", "flow", "index", "bubble", "identity-check")
ALLOWED_N = (4, 6, 8)
OUT_ENV = "FOLIATA_OUT_ROOT"
SCENARIO_DIR = Path(__file__).parent / "scenarios"

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_INPUT = 0, 2, 3, 4


class BadInput(Exception):
    pass


class ValidationFailed(Exception):
    def __init__(self, msg, report):
        super().__init__(msg)
        self.report = report


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def dumps(doc) -> str:
    return json.dumps(_jsonable(doc), indent=1, sort_keys=True, allow_nan=True) + "\n"


# -- scenario parsing -----------------------------------------------------------------
def find_scenario(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = SCENARIO_DIR / p.name
    if bundled.exists():
        return bundled
    raise BadInput(f"scenario file {path} not found")


def load_scenario(path) -> dict:
    p = find_scenario(path)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise BadInput(f"scenario {p} is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise BadInput("scenario must be a JSON object")
    doc.setdefault("_base", str(p.parent))
    doc.setdefault("_name", p.stem)
    return doc


def _resolve(doc, path):
    p = Path(path)
    if not p.is_absolute():
        p = Path(doc.get("_base", ".")) / p
    if not p.exists():
        raise BadInput(f"referenced file {path} does not exist")
    return p


def build_presentation(doc):
    pres = doc.get("presentation")
    if not isinstance(pres, dict):
        raise BadInput("scenario needs a 'presentation' object")
    if "file" in pres:
        try:
            return io.load_presentation(_resolve(doc, pres["file"]))
        except (KeyError, ValueError) as err:
            raise BadInput(f"cannot read presentation file: {err}") from None
    name = pres.get("preset")
    if name not in ("p0", "p2", "p4"):
        raise BadInput(f"unknown preset {name!r}; use p0, p2 or p4")
    n = pres.get("N", 4)
    if not isinstance(n, int) or n not in ALLOWED_N:
        raise BadInput(f"lattice side N={n!r} must be one of {ALLOWED_N}")
    metric = pres.get("metric", (1.0, 1.0, 1.0, 1.0))
    return preset(name, n, tuple(float(m) for m in metric))


def build_field(P, doc, start, seed):
    if start is None or start.get("identity"):
        U = gauge.EquivariantGaugeField.identity(P)
    elif "file" in start:
        try:
            U = io.load_field(_resolve(doc, start["file"]), P)
        except (KeyError, ValueError) as err:
            raise BadInput(f"cannot read field file: {err}") from None
    elif "abelian" in start:
        m1, m2 = start["abelian"]
        U = gauge.embed_abelian(P, int(m1), int(m2))
    elif "random" in start:
        U = gauge.random_equivariant_field(P, seed, float(start["random"]))
    else:
        raise BadInput(f"unrecognized field start {start!r}")
    if start and start.get("noise"):
        U = gauge.perturb_field(U, seed, float(start["noise"]))
    return U


# -- tasks ----------------------------------------------------------------------------
def _energy(P, U):
    rep = gauge.energy_charge(P, U)
    return {**rep.as_dict(), "fasd_residual": rep.plus, **check_field(U)}


def check_field(U):
    return {f"{k}_residual": v for k, v in gauge.check_field(U).items()}


def task_validate(P, opts, seed, out):
    return {"validation": validate(P).as_dict()}


def task_cohomology(P, opts, seed, out):
    thr = float(opts.get("threshold", cohomology.RANK_THRESHOLD))
    res = {"basic": cohomology.basic_betti(P, thr).as_dict()}
    if opts.get("twisted"):
        res["twisted"] = cohomology.basic_betti(P, thr, twisted=True).as_dict()
    pairings = {}
    for r in range(5):
        pr = cohomology.pairing_matrix(P, r)
        pairings[str(r)] = {k: v for k, v in pr.as_dict().items() if k != "pairing"}
        (out / f"pairing_{r}.csv").write_text(pr.to_csv())
    b = res["basic"]["betti"]
    res["pairings"] = pairings
    res["poincare_symmetric"] = all(b[r] == b[4 - r] for r in range(5))
    return res


def _flow_options(opts, seed):
    try:
        return flow.FlowOptions.from_dict({"seed": seed, **opts.get("flow", {})})
    except (TypeError, ValueError) as err:
        raise BadInput(f"bad flow options: {err}") from None


def task_flow(P, opts, seed, out, doc=None):
    U0 = build_field(P, doc, opts.get("start"), seed)
    fopts = _flow_options(opts, seed)
    start = _energy(P, U0)
    res = flow.descend(P, U0, fopts)
    io.save_field(res.field, out / "final_field.json")
    (out / "trajectory.csv").write_text(res.trajectory_csv())
    d = res.as_dict()
    d.pop("trajectory")
    final = _energy(P, res.field)
    return {"flow": d, "options": fopts.as_dict(), "start": start, "final": final,
            "monotone": bool(all(b[1] <= a[1] for a, b in zip(res.trajectory, res.trajectory[1:])))}


def task_index(P, opts, seed, out, doc=None):
    U = build_field(P, doc, opts.get("start"), seed)
    out_flow = None
    if opts.get("flow_first"):
        res = flow.descend(P, U, _flow_options(opts, seed), with_reducibility=False)
        U = res.field
        out_flow = {k: v for k, v in res.as_dict().items() if k != "trajectory"}
    rep = analysis.numeric_index(P, U)
    return {"index": rep.as_dict(), "flow": out_flow, "energy": _energy(P, U)}


def task_bubble(P, opts, seed, out, doc=None):
    if "fields" in opts:
        fields = [build_field(P, doc, {"file": f}, seed) for f in opts["fields"]]
    else:
        syn = opts.get("synthetic", {})
        fields = analysis.lump_sequence(P, multiplicity=int(syn.get("multiplicity", 1)),
                                        widths=syn.get("widths"))
    if len(fields) < 3:
        raise BadInput("bubbling needs at least three fields")
    rep = analysis.bubble_analyze(P, fields, eps2=float(opts.get("eps2", 0.5)))
    return {"bubbling": rep.as_dict(P), "n_fields": len(fields)}


def task_identity(P, opts, seed, out, doc=None):
    specs = opts.get("fields", [{"identity": True}])
    tol = float(opts.get("tolerance", 1e-10))
    rows = []
    for i, s in enumerate(specs):
        rows.append({"start": s, **_energy(P, build_field(P, doc, s, seed + i))})
    worst = max(r["identity_residual"] for r in rows)
    res = {"fields": rows, "worst_identity_residual": worst, "tolerance": tol}
    if worst > tol:
        raise ValidationFailed(f"energy identity residual {worst:.3e} exceeds {tol:g}", res)
    return res


def run_scenario_doc(doc, out=None, seed=None, threads=None) -> tuple[int, dict]:
    """Run a parsed scenario and write its report; returns (exit code, report)."""
    task = doc.get("task")
    out = Path(out or doc.get("output") or
               Path(os.environ.get(OUT_ENV, "foliata_runs")) / doc.get("_name", str(task)))
    try:
        if task not in TASKS:
            raise BadInput(f"unknown task {task!r}; choose from {', '.join(TASKS)}")
        seed = int(doc.get("seed", 0) if seed is None else seed)
        if seed < 0 or seed >= 2 ** 64:
            raise BadInput("seed must be an unsigned 64-bit integer")
        P = build_presentation(doc)
    except (BadInput, TypeError, ValueError) as err:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps({
            "tool": {"name": "foliata", "version": __version__}, "task": task,
            "seed": seed, "status": "bad_input", "error": str(err)}))
        raise BadInput(str(err)) from None
    out.mkdir(parents=True, exist_ok=True)
    report = {"tool": {"name": "foliata", "version": __version__}, "task": task,
              "seed": seed, "threads": threads, "presentation": P.name,
              "presentation_hash": P.hash, "status": "ok"}
    t0 = time.time()
    code = EXIT_OK
    opts = doc.get("options", {})
    val = validate(P)
    try:
        if not val.passed and task != "validate":
            raise ValidationFailed("presentation failed validation", val.as_dict())
        if task == "validate":
            report["result"] = task_validate(P, opts, seed, out)
            if not val.passed:
                code = EXIT_VALIDATION
                report["status"] = "validation_failed"
        elif task == "cohomology":
            report["result"] = task_cohomology(P, opts, seed, out)
        else:
            fn = {"flow": task_flow, "index": task_index, "bubble": task_bubble,
                  "identity-check": task_identity}[task]
            report["result"] = fn(P, opts, seed, out, doc)
    except BadInput as err:
        report.update(status="bad_input", error=str(err))
        (out / "report.json").write_text(dumps(report))
        raise
    except ValidationFailed as err:
        code = EXIT_VALIDATION
        report.update(status="validation_failed", error=str(err), result=err.report)
    except (BranchCutError, EquivarianceError, PerturbationError, FloatingPointError,
            np.linalg.LinAlgError) as err:
        code = EXIT_NUMERICAL
        report.update(status="numerical_error", error=f"{type(err).__name__}: {err}")
    (out / "report.json").write_text(dumps(report))
    meta = {"started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(t0)),
            "elapsed_seconds": time.time() - t0, "exit_code": code}
    (out / "meta.json").write_text(dumps(meta))
    return code, report


def _limited(threads, fn):
    if threads is None:
        return fn()
    from threadpoolctl import threadpool_limits
    with threadpool_limits(limits=threads):
        return fn()


def _execute(doc, args):
    try:
        code, report = _limited(args.threads, lambda: run_scenario_doc(
            doc, args.out, args.seed, args.threads))
    except BadInput as err:
        print(f"foliata: bad input: {err}", file=sys.stderr)
        return EXIT_INPUT
    if code != EXIT_OK:
        print(f"foliata: {report['status']}: {report.get('error', '')}", file=sys.stderr)
    return code


def run_scenario(path, out=None, seed=None, threads=None) -> int:
    ns = argparse.Namespace(out=out, seed=seed, threads=threads)
    try:
        doc = load_scenario(path)
    except BadInput as err:
        print(f"foliata: bad input: {err}", file=sys.stderr)
        return EXIT_INPUT
    return _execute(doc, ns)


def build_parser():
    parser = argparse.ArgumentParser(prog="foliata", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"foliata {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<scenario>)")
    common.add_argument("--threads", type=int, help="BLAS worker threads")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run a scenario file")
    p.add_argument("--scenario", required=True)
    p = sub.add_parser("flow", parents=[common], help="flow a stored field")
    p.add_argument("--scenario", required=True, help="scenario giving the presentation")
    p.add_argument("--start", help="field file to start from")
    p.add_argument("--opts", help="JSON file of flow options")
    p = sub.add_parser("bubble", parents=[common], help="bubbling analysis of stored fields")
    p.add_argument("--manifest", required=True,
                   help="JSON with 'presentation' and an ordered 'fields' list")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("foliata: bad input: --threads must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        if args.command == "run":
            doc = load_scenario(args.scenario)
        elif args.command == "flow":
            doc = load_scenario(args.scenario)
            doc["task"] = "flow"
            opts = doc.setdefault("options", {})
            if args.start:
                opts["start"] = {"file": str(Path(args.start).resolve())}
            if args.opts:
                opts["flow"] = json.loads(Path(args.opts).read_text())
        else:
            doc = load_scenario(args.manifest)
            doc["task"] = "bubble"
            fields = doc.get("fields")
            if not isinstance(fields, list):
                raise BadInput("manifest needs an ordered 'fields' list")
            doc["options"] = {"fields": fields, "eps2": doc.get("eps2", 0.5)}
    except (BadInput, OSError, json.JSONDecodeError) as err:
        print(f"foliata: bad input: {err}", file=sys.stderr)
        return EXIT_INPUT
    return _execute(doc, args)


if __name__ == "__main__":
    sys.exit(main())
