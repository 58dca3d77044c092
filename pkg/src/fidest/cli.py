"""Command-line interface: ``fidest {design,evaluate,simulate,verify,reproduce-table}``.

Exit codes: 0 success, 2 usage error, 3 solver failure, 4 validation
failure, 5 I/O failure.
"""

import argparse
import datetime
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import AdmissibilityError, SolverError, check_admissible, surrogate_value, unbiasedness_residual, worst_case_variance
from .design import EstimatorDesign, target_fingerprint
from .oasis import solve_oasis
from .operators import check_pure_state, projector
from .povm import MeasurementFamily
from .simulate import (
    REFERENCE_MSE,
    REFERENCE_SHOTS,
    ExperimentConfig,
    FingerprintMismatchError,
    haar_random_target,
    run_experiment,
)
from .spectral import ScaleLimitError, solve_spectral, validate_certificate
from .verification import run_suite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4
EXIT_IO = 5

logger = logging.getLogger("fidest")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_amplitudes(path):
    """Target amplitudes from a JSON list of [re, im] pairs."""
    with open(path) as fh:
        pairs = json.load(fh)
    vec = np.array([complex(re, im) for re, im in pairs])
    return check_pure_state(vec / np.linalg.norm(vec), tol=1e-12)


def resolve_target(n, seed=None, path=None, basis0=False):
    chosen = sum(x is not None and x is not False for x in (seed, path, basis0))
    if chosen != 1:
        raise CliError("give exactly one of --target-seed, --target-file, --target-basis0", EXIT_USAGE)
    if basis0:
        vec = np.zeros(2**n, dtype=complex)
        vec[0] = 1.0
    elif path is not None:
        try:
            vec = load_amplitudes(path)
        except OSError as exc:
            raise CliError(f"cannot read target file: {exc}", EXIT_IO) from exc
    else:
        vec = haar_random_target(n, seed)
    if vec.size != 2**n:
        raise CliError(f"target has {vec.size} amplitudes, expected {2**n}", EXIT_USAGE)
    return projector(vec)


def write_manifest(out_dir, command, config, outputs, started):
    manifest = {
        "command": command,
        "config_hash": hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest(),
        "tool_version": __version__,
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def solve(method, target, family, tol, allow_large=False):
    if method == "oasis":
        return solve_oasis(target, family, tol=tol)
    return solve_spectral(target, family, tol=tol, allow_large=allow_large)[0]


def cmd_design(args):
    target = resolve_target(args.n, args.target_seed, args.target_file, args.target_basis0)
    family = MeasurementFamily(args.n, ["Z" * args.n] if args.restrict_z else None)
    design = solve(args.method, target, family, args.tol, args.allow_large)
    if args.out:
        try:
            design.save(args.out)
        except OSError as exc:
            raise CliError(f"cannot write design: {exc}", EXIT_IO) from exc
    print(f"objective={design.objective!r}")
    return EXIT_OK


def cmd_evaluate(args):
    try:
        design = EstimatorDesign.load(args.design)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load design: {exc}", EXIT_IO) from exc
    target = resolve_target(design.n, args.target_seed, args.target_file, args.target_basis0)
    if design.target_hash and design.target_hash != target_fingerprint(target):
        raise CliError("design fingerprint does not match the target", EXIT_VALIDATION)
    family = MeasurementFamily(design.n, design.settings)
    residual = unbiasedness_residual(design.alpha, target, family)
    print(f"residual={residual!r}")
    if residual > 1e-7:
        raise CliError(f"design is not unbiased for this target (residual {residual:.3e})", EXIT_VALIDATION)
    try:
        check_admissible(design.q, design.alpha)
    except AdmissibilityError as exc:
        print("admissible=false")
        raise CliError(str(exc), EXIT_VALIDATION) from exc
    print("admissible=true")
    gamma, t_star = worst_case_variance(design, target, family)
    value, _ = surrogate_value(design.alpha)
    print(f"gamma={gamma!r}")
    print(f"t_star={t_star!r}")
    print(f"L={value!r}")
    print(f"L_squared={value**2!r}")
    print(f"surrogate_gap={value**2 - gamma!r}")
    if design.certificate is not None:
        report = validate_certificate(design, design.certificate, target, family)
        print(f"certificate={'pass' if report.ok else 'fail'}")
        if not report.ok:
            print(report)
            raise CliError("certificate validation failed: " + ", ".join(report.failures), EXIT_VALIDATION)
    return EXIT_OK


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config: {exc}", EXIT_IO) from exc


def cmd_simulate(args):
    started = _now()
    raw = _load_config(args.config)
    base = Path(args.config).resolve().parent
    shots = raw["shots"]
    if isinstance(shots, dict):
        if len(set(shots.values())) != 1:
            raise CliError("shot budgets differ between methods", EXIT_VALIDATION)
        shots = next(iter(shots.values()))
    design_paths = {m: base / p for m, p in raw["designs"].items()}
    designs = {}
    for m, p in design_paths.items():
        if not p.exists():
            raise CliError(f"missing design file {p}", EXIT_IO)
        designs[m] = EstimatorDesign.load(p)
    n = int(raw["n"])
    target_file = raw.get("target_file")
    target = resolve_target(
        n,
        raw.get("target_seed") if target_file is None else None,
        str(base / target_file) if target_file else None,
        bool(raw.get("target_basis0", False)),
    )
    config = ExperimentConfig(
        n=n,
        target_seed=int(raw.get("target_seed", -1)),
        shots=int(shots),
        trials=int(raw["trials"]),
        seed=int(raw.get("seed", 0)),
        noise=raw.get("noise", {"kind": "depolarizing", "p": 0.1}),
        methods=tuple(raw.get("methods", designs)),
    )
    try:
        result = run_experiment(config, designs, target=target)
    except FingerprintMismatchError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from exc
    out_dir = Path(args.out_dir or (base / raw.get("out_dir", "results")))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path, csv_path = out_dir / "results.json", out_dir / "results.csv"
        result.save_json(json_path)
        result.save_csv(csv_path)
        write_manifest(out_dir, sys.argv, raw, [json_path, csv_path], started)
    except OSError as exc:
        raise CliError(f"cannot write results: {exc}", EXIT_IO) from exc
    for m, v in result.mse.items():
        print(f"mse[{m}]={v!r}")
    return EXIT_OK


def cmd_verify(args):
    results = run_suite(args.level, seed=args.seed, log=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VALIDATION if failed else EXIT_OK


def reproduce_table(ns, targets=1, trials=1000, seed=0, allow_large=False, log=print):
    """Table-style comparison: mean MSE over ``targets`` Haar draws per n at the default budgets."""
    rows = []
    for n in ns:
        if n not in REFERENCE_SHOTS:
            raise CliError(f"no default shot budget for n={n}", EXIT_USAGE)
        family = MeasurementFamily(n)
        per_target = []
        t0 = time.perf_counter()
        for k in range(targets):
            target = projector(haar_random_target(n, seed + k))
            designs = {
                "oasis": solve_oasis(target, family),
                "spectral": solve_spectral(target, family, allow_large=allow_large)[0],
            }
            cfg = ExperimentConfig(n=n, target_seed=seed + k, shots=REFERENCE_SHOTS[n], trials=trials, seed=seed + k)
            res = run_experiment(cfg, designs, target=target)
            per_target.append((res.mse["oasis"], res.mse["spectral"]))
        oasis, spectral = np.mean(per_target, axis=0)
        rows.append({"n": n, "shots": REFERENCE_SHOTS[n], "oasis": oasis, "spectral": spectral, "seconds": time.perf_counter() - t0})
        if log:
            log(f"n={n} done in {rows[-1]['seconds']:.1f}s")
    return rows


def format_table(rows):
    lines = [
        f"{'n':>2}  {'shots':>6}  {'OASIS':>8}  {'spectral':>8}  {'paper OASIS':>11}  {'paper spectral':>14}   (MSE x 1e-4)",
    ]
    for r in rows:
        po, ps = REFERENCE_MSE[r["n"]]
        lines.append(f"{r['n']:>2}  {r['shots']:>6}  {r['oasis'] * 1e4:>8.3f}  {r['spectral'] * 1e4:>8.3f}  {po:>11.2f}  {ps:>14.2f}")
    return "\n".join(lines)


def cmd_reproduce_table(args):
    started = _now()
    if any(n > 4 for n in args.n) and not args.allow_large:
        raise CliError("n > 4 needs --allow-large", EXIT_USAGE)
    rows = reproduce_table(args.n, args.targets, args.trials, args.seed, args.allow_large, log=lambda s: print(s, file=sys.stderr))
    print(format_table(rows))
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "table.json"
        path.write_text(json.dumps(rows, indent=2) + "\n")
        write_manifest(out_dir, sys.argv, vars(args) | {"func": None}, [path], started)
    return EXIT_OK


def _add_target_args(p):
    p.add_argument("--target-seed", type=int, help="Haar-random target from this seed")
    p.add_argument("--target-file", help="JSON list of [re, im] amplitude pairs")
    p.add_argument("--target-basis0", action="store_true", default=False, help="target |0...0>")


def build_parser():
    parser = argparse.ArgumentParser(prog="fidest", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="solve an estimator design")
    p.add_argument("--method", choices=("oasis", "spectral"), required=True)
    p.add_argument("--n", type=int, required=True)
    _add_target_args(p)
    p.add_argument("--restrict-z", action="store_true", help="use only the all-Z setting")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--allow-large", action="store_true", help="permit n = 5, 6 SDP solves")
    p.add_argument("--out", help="write the design JSON here")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("evaluate", help="exact worst-case variance and surrogate of a design")
    p.add_argument("design")
    _add_target_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="run a seeded matched-budget experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reproduce-table", help="MSE comparison at the default shot budgets")
    p.add_argument("--n", type=int, nargs="+", default=[3])
    p.add_argument("--targets", type=int, default=1)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_reproduce_table)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ScaleLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        for k, v in exc.diagnostics.items():
            print(f"  {k}: {v}", file=sys.stderr)
        return EXIT_SOLVER
    except AdmissibilityError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
