"""Command-line entry point: ``tpslab <subcommand> [flags]``.

Exit codes: 0 success, 2 invalid input, 3 numerical-quality failure,
4 selftest assertion failure. Data goes to stdout (or ``--out``), diagnostics
to stderr.
"""

from __future__ import annotations

import argparse
import ast
import json
import logging
import math
import operator
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AmbiguousClustering, AmbiguousClusteringWarning, LabError, ValidationError
from .numkernel import matrix_from_json, require_hermitian

log = logging.getLogger("tpslab")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_SELFTEST = 0, 2, 3, 4

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _number(text: str) -> float:
    """Parse a float that may mention ``pi`` (``pi/4``, ``3*pi/16``)."""

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ValueError(text)

    try:
        return ev(ast.parse(text.strip(), mode="eval").body)
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_t_grid(text: str) -> list[float]:
    """``start:stop:step`` (stop included) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("t-grid must be start:stop:step")
        start, stop, step = (_number(p) for p in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError("t-grid needs step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9))
        return [start + k * step for k in range(n + 1)]
    return [_number(p) for p in text.split(",") if p.strip()]


def parse_factors(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad factor list {text!r}") from None


def parse_seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _read_json(path: str):
    return json.loads(Path(path).read_text())


def _load_hamiltonian(args, rng=None) -> np.ndarray:
    from .lab import resolve_hamiltonian

    if getattr(args, "hamiltonian", None):
        obj = _read_json(args.hamiltonian)
        if "matrix" in obj:
            obj = obj["matrix"]
        return require_hermitian(matrix_from_json(obj))
    if getattr(args, "preset", None):
        if rng is None:
            from .numkernel import make_rng

            if args.preset.startswith("gue") and getattr(args, "seed", None) is None:
                raise ValidationError("random presets need --seed")
            rng = make_rng(getattr(args, "seed", None) or 0)
        return resolve_hamiltonian({"preset": args.preset}, rng)
    raise ValidationError("give --hamiltonian or --preset")


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _default_factors(dim: int) -> tuple[int, ...]:
    n = int(round(math.log2(dim)))
    if 2**n != dim:
        raise ValidationError(f"dimension {dim} is not a power of two; pass --factors")
    return (2,) * n


# -- subcommands ---------------------------------------------------------------


def cmd_dims(args) -> int:
    from .lab import qudit_table, rows_to_csv, run_dimension_scan
    from .tps import dimension_ledger

    if args.table:
        d, n_max = args.table
        rows = qudit_table(d, n_max)
        _emit(args, _dump({"version": __version__, "rows": rows}) if args.format == "json" else rows_to_csv(rows))
    elif args.scan:
        rows = run_dimension_scan(args.scan)
        _emit(args, _dump({"version": __version__, "rows": rows}) if args.format == "json" else rows_to_csv(rows))
    elif args.factors:
        led = dimension_ledger(args.factors).as_dict()
        _emit(args, _dump({"version": __version__, **led}) if args.format == "json" else rows_to_csv([led]))
    else:
        raise ValidationError("dims needs --factors, --table D N_MAX or --scan MAX_DIM")
    return EXIT_OK


def cmd_commutant(args) -> int:
    from .spectrum import cluster_spectrum, commutant_dimension, commutant_oracle_dimension

    h = _load_hamiltonian(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AmbiguousClusteringWarning)
        ham = cluster_spectrum(h, args.cluster_tol)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    desc = commutant_dimension(ham)
    oracle = commutant_oracle_dimension(ham) if ham.dim <= 64 else None
    out = {
        "version": __version__,
        "multiplicities": list(desc.multiplicities),
        "dimension": desc.dimension,
        "torus_dimension": desc.torus_dimension,
        "oracle_dimension": oracle,
        "oracle_agreement": None if oracle is None else oracle == desc.dimension,
        "ambiguous": ham.ambiguous,
    }
    _emit(args, _dump(out))
    if args.strict and ham.ambiguous:
        raise AmbiguousClustering(f"ambiguous gaps {list(ham.ambiguous_gaps)}")
    return EXIT_OK


def cmd_tps_check(args) -> int:
    from .tps import TensorProductStructure, algebras_of, check_tps_conditions, standard_tps

    if args.tps:
        tps = TensorProductStructure.from_json(_read_json(args.tps))
    elif args.factors:
        tps = standard_tps(args.factors)
    else:
        raise ValidationError("tps-check needs --tps or --factors")
    report = check_tps_conditions(algebras_of(tps))
    _emit(args, _dump({"version": __version__, "factor_dims": list(tps.factor_dims), **report.as_dict()}))
    return EXIT_OK


def cmd_orbit(args) -> int:
    from .entangle import probe_family
    from .numkernel import make_rng
    from .spectrum import cluster_spectrum, sample_commuting_unitary
    from .tps import (
        algebra_set_distance,
        algebras_of,
        certify_nonequivalence,
        standard_tps,
        transform_tps,
    )

    rng = make_rng(args.seed)
    h = _load_hamiltonian(args, rng)
    factors = args.factors or _default_factors(h.shape[0])
    ref = standard_tps(factors)
    ham = cluster_spectrum(h, args.cluster_tol)
    probes = probe_family(ref.dim, rng, args.n_random)
    ref_algs = algebras_of(ref)
    samples = []
    for k in range(args.count):
        s = sample_commuting_unitary(ham, rng)
        moved = transform_tps(ref, s)
        w = certify_nonequivalence(ref, moved, probes)
        samples.append({
            "index": k,
            "verdict": w.verdict,
            "max_discrepancy": w.max_discrepancy,
            "algebra_set_distance": algebra_set_distance(ref_algs, algebras_of(moved)),
        })
    out = {
        "version": __version__,
        "seed": args.seed,
        "factor_dims": list(factors),
        "multiplicities": list(ham.multiplicities),
        "certified": sum(s["verdict"] == "NonequivalentCertified" for s in samples),
        "samples": samples,
    }
    _emit(args, _dump(out))
    if args.strict and ham.ambiguous:
        raise AmbiguousClustering("ambiguous clustering")
    return EXIT_OK


def _config_from_args(args):
    from .lab import ExperimentConfig

    if args.config:
        obj = _read_json(args.config)
        obj["seed"] = args.seed
        cfg = ExperimentConfig.from_dict(obj)
    else:
        if args.hamiltonian:
            src = {"matrix": _read_json(args.hamiltonian)}
            if "matrix" in src["matrix"]:
                src = src["matrix"]
        else:
            src = {"preset": args.preset or "ising2"}
        cfg = ExperimentConfig(
            experiment_id=args.experiment_id,
            seed=args.seed,
            factor_dims=args.factors or (2, 2),
            hamiltonian=src,
            t_grid=args.t_grid,
        )
    return cfg


def cmd_counterexamples(args) -> int:
    from .lab import persist, run_counterexample_family, run_entangling_contradiction

    cfg = _config_from_args(args)
    records = []
    if args.experiment in ("family", "both"):
        records.append(run_counterexample_family(cfg))
    if args.experiment in ("contradiction", "both"):
        records.append(run_entangling_contradiction(cfg))
    if args.run_root:
        d = None
        for r in records:
            d = persist(r, cfg, args.run_root)
        print(f"appended {len(records)} record(s) to {d / 'record.jsonl'}", file=sys.stderr)
    _emit(args, _dump({"version": __version__, "records": [r.payload() for r in records]}))
    return EXIT_OK


def cmd_entropy_trajectory(args) -> int:
    from .lab import initial_state, trajectory_csv, trajectory_with_residuals
    from .spectrum import cluster_spectrum
    from .tps import TensorProductStructure, standard_tps

    h = _load_hamiltonian(args)
    if args.tps:
        tps = TensorProductStructure.from_json(_read_json(args.tps))
    else:
        tps = standard_tps(args.factors or _default_factors(h.shape[0]))
    ham = cluster_spectrum(h, args.cluster_tol)
    if not args.t_grid:
        raise ValidationError("entropy-trajectory needs --t-grid")
    traj, residuals = trajectory_with_residuals(initial_state(args.state, tps.factor_dims), ham, tps, args.t_grid)
    _emit(args, trajectory_csv(traj, residuals))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest()
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", file=sys.stderr)
    _emit(args, _dump({
        "version": __version__,
        "checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in results],
    }))
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_SELFTEST


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tpslab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"tpslab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, hamiltonian=False, seed=None, strict=False):
        sp.add_argument("--out", help="write data here instead of stdout")
        if hamiltonian:
            sp.add_argument("--hamiltonian", help="matrix JSON file")
            sp.add_argument("--preset", help="ising2, local2, heisenberg2 or gue(dim)")
            sp.add_argument("--cluster-tol", type=float, default=None)
        if seed is not None:
            sp.add_argument("--seed", type=parse_seed, required=seed)
        if strict:
            sp.add_argument("--strict", action="store_true", help="ambiguous clustering is an error (exit 3)")

    sp = sub.add_parser("dims", help="dimension ledger, qudit table, or factorization scan")
    common(sp)
    sp.add_argument("--factors", type=parse_factors)
    sp.add_argument("--table", type=int, nargs=2, metavar=("D", "N_MAX"))
    sp.add_argument("--scan", type=int, metavar="MAX_DIM")
    sp.add_argument("--format", choices=("json", "csv"), default=None)
    sp.set_defaults(func=cmd_dims)

    sp = sub.add_parser("commutant", help="commutant dimension of a Hamiltonian")
    common(sp, hamiltonian=True, seed=False, strict=True)
    sp.set_defaults(func=cmd_commutant)

    sp = sub.add_parser("tps-check", help="observable-algebra conditions of a TPS")
    common(sp)
    sp.add_argument("--tps", help="TPS JSON file")
    sp.add_argument("--factors", type=parse_factors)
    sp.set_defaults(func=cmd_tps_check)

    sp = sub.add_parser("orbit", help="transform a TPS by sampled commuting unitaries")
    common(sp, hamiltonian=True, seed=True, strict=True)
    sp.add_argument("--factors", type=parse_factors)
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--n-random", type=int, default=8, help="Haar probes in the probe family")
    sp.set_defaults(func=cmd_orbit)

    sp = sub.add_parser("counterexamples", help="seeded counterexample-family and entangling runs")
    common(sp, hamiltonian=True, seed=True)
    sp.add_argument("--config", help="ExperimentConfig JSON")
    sp.add_argument("--factors", type=parse_factors)
    sp.add_argument("--t-grid", type=parse_t_grid)
    sp.add_argument("--experiment", choices=("family", "contradiction", "both"), default="both")
    sp.add_argument("--experiment-id", default="counterexamples")
    sp.add_argument("--run-root", help="append records under RUN_ROOT/<id>/<seed>/")
    sp.set_defaults(func=cmd_counterexamples)

    sp = sub.add_parser("entropy-trajectory", help="CSV of entropies along exp(-iHt)")
    common(sp, hamiltonian=True)
    sp.add_argument("--tps", help="TPS JSON file")
    sp.add_argument("--factors", type=parse_factors)
    sp.add_argument("--t-grid", type=parse_t_grid)
    sp.add_argument("--state", default="zero", help="zero, maximally_mixed or basis:<i>")
    sp.set_defaults(func=cmd_entropy_trajectory)

    sp = sub.add_parser("selftest", help="run the built-in invariant checks")
    common(sp)
    sp.set_defaults(func=cmd_selftest)
    return p


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    if getattr(args, "format", "json") is None:
        args.format = "csv" if args.table or args.scan else "json"
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None) -> None:
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
