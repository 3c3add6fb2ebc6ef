"""Command-line interface: the ``lab`` entry point.

Subcommands map to the runner scenarios plus two utilities::

    lab lattice  --delta 0.5 --region 2.0          # build + dump a lattice
    lab berezin  [--atoms 20]                      # identity spot-check
    lab toeplitz [--p 2 --r 2 --degrees 64,128]    # operator-side sweep
    lab carleson [--p 2 --q 2]                     # embedding-side sweep
    lab family   --name radial-powers --ts 1,2,3   # print measure specs
    lab verify   --config cfg.json                 # full config-driven run

Exit codes: 0 success, 2 configuration error, 3 cell-level numeric error
under ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .experiments import (ConfigError, ExperimentConfig, builtin_family,
                          emit_report, run_scenario)
from .geometry import generate_lattice
from .measures import measure_to_json
from .operators import build_basis, toeplitz_matrix
from .quadrature import QuadratureScheme


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v != "")


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v != "")


def _formats(arg: str) -> tuple[str, ...]:
    if arg == "all":
        return ("json", "csv", "plotdata")
    return tuple(v.strip() for v in arg.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lab", description="Bergman-space operator laboratory")
    parser.add_argument("--out", default="lab-out",
                        help="output directory (default: lab-out)")
    parser.add_argument("--format", default="json,csv",
                        help="comma list of json,csv,plotdata or 'all'")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--strict", action="store_true",
                        help="exit 3 if any cell records a numeric error")
    sub = parser.add_subparsers(dest="command", required=True)

    lat = sub.add_parser("lattice", help="generate a hyperbolic lattice")
    lat.add_argument("--delta", type=float, required=True)
    lat.add_argument("--region", type=float, required=True)
    lat.add_argument("--n", type=int, default=1)

    ber = sub.add_parser("berezin", help="Berezin identity spot check")
    ber.add_argument("--atoms", type=int, default=20,
                     help="number of random atomic measures")

    toe = sub.add_parser("toeplitz", help="summing brackets vs measure norm")
    toe.add_argument("--p", type=float, default=2.0)
    toe.add_argument("--r", type=float, default=2.0)
    toe.add_argument("--degrees", type=_parse_ints, default=(64, 128))
    toe.add_argument("--deltas", type=_parse_floats, default=(0.5,))
    toe.add_argument("--family", default="default")
    toe.add_argument("--dump-matrix", default=None, metavar="DIR",
                     help="dump truncated matrices as .npz for inspection")

    car = sub.add_parser("carleson", help="embedding brackets vs s-norm")
    car.add_argument("--p", type=float, default=2.0)
    car.add_argument("--q", type=float, default=2.0)
    car.add_argument("--degrees", type=_parse_ints, default=(64, 128))
    car.add_argument("--deltas", type=_parse_floats, default=(0.5,))
    car.add_argument("--family", default="default")

    fam = sub.add_parser("family", help="print a builtin measure family")
    fam.add_argument("--name", required=True)
    fam.add_argument("--ts", type=_parse_floats, default=None)
    fam.add_argument("--radii", type=_parse_floats, default=None)
    fam.add_argument("--height", type=float, default=None)

    ver = sub.add_parser("verify", help="run a full config-driven scenario")
    ver.add_argument("--config", required=True)
    return parser


def _random_atom_measures(count: int, seed: int):
    from .geometry import BallPoint
    from .measures import AtomicMeasure
    rng = np.random.default_rng(seed)
    measures = []
    for _ in range(count):
        k = int(rng.integers(1, 5))
        pos = 0.85 * np.sqrt(rng.uniform(0, 1, k)) \
            * np.exp(2j * np.pi * rng.uniform(0, 1, k))
        mass = rng.uniform(0.1, 2.0, k)
        measures.append(AtomicMeasure(tuple(
            (BallPoint.of(z), float(m)) for z, m in zip(pos, mass))))
    return measures


def _family_params(args) -> dict:
    params = {}
    if getattr(args, "ts", None):
        params["ts"] = args.ts
    if getattr(args, "radii", None):
        params["radii"] = args.radii
    if getattr(args, "height", None) is not None:
        params["height"] = args.height
    return params


def _finish(report, args) -> int:
    paths = emit_report(report, args.out, _formats(args.format))
    for p in paths:
        print(p)
    summary = report.summary
    print(f"cells={summary['cells']} errors={summary['errors']} "
          f"mismatches={summary['divergence_mismatches']} "
          f"envelope={summary['ratio_envelope']}")
    if args.strict and summary["errors"]:
        return 3
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "lattice":
            lat = generate_lattice(args.delta, args.region, args.n)
            os.makedirs(args.out, exist_ok=True)
            path = os.path.join(args.out, "lattice.json")
            with open(path, "w") as fh:
                json.dump(lat.to_json(), fh)
                fh.write("\n")
            print(path)
            print(f"points={len(lat)} multiplicity={lat.multiplicity}")
            return 0

        if args.command == "family":
            measures = builtin_family(args.name, _family_params(args))
            print(json.dumps([measure_to_json(m) for m in measures],
                             indent=1))
            return 0

        if args.command == "berezin":
            cfg = ExperimentConfig(
                scenario="berezin-identity",
                measures=tuple(_random_atom_measures(args.atoms, args.seed)),
                seed=args.seed)
            return _finish(run_scenario(cfg, args.threads), args)

        if args.command == "toeplitz":
            cfg = ExperimentConfig(
                scenario="toeplitz-summing",
                measures=tuple(builtin_family(args.family)),
                p=args.p, r=args.r, degrees=args.degrees,
                deltas=args.deltas, seed=args.seed).validate()
            report = run_scenario(cfg, args.threads)
            if args.dump_matrix:
                _dump_matrices(cfg, args.dump_matrix)
            return _finish(report, args)

        if args.command == "carleson":
            cfg = ExperimentConfig(
                scenario="carleson-summing",
                measures=tuple(builtin_family(args.family)),
                p=args.p, q=args.q, degrees=args.degrees,
                deltas=args.deltas, seed=args.seed).validate()
            return _finish(run_scenario(cfg, args.threads), args)

        if args.command == "verify":
            with open(args.config) as fh:
                obj = json.load(fh)
            cfg = ExperimentConfig.from_json(obj)
            return _finish(run_scenario(cfg, args.threads), args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return 2


def _dump_matrices(cfg: ExperimentConfig, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    for i, mu in enumerate(cfg.measures):
        for deg in cfg.degrees:
            op = toeplitz_matrix(mu, build_basis(1, 0.0, deg))
            path = os.path.join(out_dir, f"toeplitz_{i}_D{deg}.npz")
            np.savez(path, matrix=op.matrix, degree=deg,
                     measure=json.dumps(measure_to_json(mu)))
            print(path)


if __name__ == "__main__":
    raise SystemExit(main())
