"""Batch command line: ``dysonreach <subcommand> ...``.

Exit codes: 0 success, 2 malformed input, 3 certificate not attainable
(truncation budget or net budget).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import problems
from .controls import control_family, zero_control
from .dyson import DysonConfig, apriori_bound, propagate_dyson, tail_bound, w_terms
from .errors import CertificateUnreachableError, InvalidInputError, NetBudgetExceededError
from .io import dump_problem, encode_vector, load_problem, net_from_csv, net_to_csv
from .linops import operator_norm, semigroup_bounds
from .oracle import picard_solution, propagate_oracle
from .reach import (EpsNet, attainable_net, covering_number, obstruction_report,
                    sample_attainable_points, unit_sphere_targets)

EXIT_INPUT = 2
EXIT_CERTIFICATE = 3


def _emit(record: dict, out: str | None = None) -> None:
    text = json.dumps(record, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def _write_text(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _require(value, name):
    if value is None:
        raise InvalidInputError(f"{name} missing: pass --{name} or set it in the problem file")
    return value


def _cfg(args) -> DysonConfig:
    return DysonConfig(grid_points_per_piece=args.grid, max_order=args.max_order)


def cmd_propagate(args) -> int:
    prob = load_problem(args.problem)
    u = prob.control or zero_control()
    t = args.t if args.t is not None else (prob.T if prob.T is not None else u.end)
    eps = args.eps if args.eps is not None else (prob.eps if prob.eps is not None else 1e-8)
    bounds = semigroup_bounds(prob.A)
    record = {"method": args.method, "t": t}
    if args.method == "dyson":
        res = propagate_dyson(prob.A, prob.B, prob.psi0, u, t, eps, _cfg(args))
        record.update(res.to_dict())
        state = res.state
    else:
        start = time.perf_counter()
        if args.method == "oracle":
            state = propagate_oracle(prob.A, prob.B, prob.psi0, u, t, steps=args.steps)
        else:
            state = picard_solution(prob.A, prob.B, prob.psi0, u, t, iterations=args.iterations, grid=args.steps)
        record.update({
            "state": encode_vector(state),
            "truncation_order": None,
            "series_error_bound": None,
            "quadrature_error_estimate": None,
            "elapsed": time.perf_counter() - start,
        })
    record["apriori_bound"] = apriori_bound(t, u.l1_norm(upto=t), float(np.linalg.norm(prob.psi0)),
                                            bounds, operator_norm(prob.B))
    record["state_norm"] = float(np.linalg.norm(state))
    _emit(record, args.out)
    return 0


def cmd_terms(args) -> int:
    prob = load_problem(args.problem)
    u = prob.control or zero_control()
    t = args.t if args.t is not None else (prob.T if prob.T is not None else u.end)
    terms = w_terms(prob.A, prob.B, prob.psi0, u, t, args.p_max, _cfg(args))
    bounds = semigroup_bounds(prob.A)
    B_norm = operator_norm(prob.B)
    psi0_norm = float(np.linalg.norm(prob.psi0))
    rows = [
        {"p": p, "norm": float(np.linalg.norm(w)),
         "bound": tail_bound(p, t, u.l1_norm(upto=t), bounds, B_norm) * psi0_norm}
        for p, w in enumerate(terms)
    ]
    _emit({"t": t, "terms": rows}, args.out)
    return 0


def _net_params(args, prob):
    T = _require(args.T if args.T is not None else prob.T, "T")
    K = _require(args.K if args.K is not None else prob.K, "K")
    seed = args.seed if args.seed is not None else prob.seed
    return T, K, seed


def cmd_net(args) -> int:
    prob = load_problem(args.problem)
    T, K, seed = _net_params(args, prob)
    eps = _require(args.eps if args.eps is not None else prob.eps, "eps")
    net = attainable_net(prob.A, prob.B, prob.psi0, T, K, eps, args.family_size, seed, _cfg(args),
                         n_times=args.n_times, n_pieces=args.n_pieces, budget=args.budget)
    summary = {
        "n_centers": len(net),
        "radius": net.radius,
        "N_eps": net.info["N_eps"],
        "in_sample_coverage": net.info["in_sample_coverage"],
        "layer_sizes": net.info["layer_sizes"],
        "n_samples": net.info["n_samples"],
        "eps": eps, "T": T, "K": K, "seed": seed, "family_size": args.family_size,
    }
    if args.out:
        Path(args.out).write_text(net_to_csv(net.centers, net.radius, prob.field))
        summary["centers_file"] = str(args.out)
        Path(str(args.out) + ".summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _emit(summary)
    return 0


def cmd_cover(args) -> int:
    prob = load_problem(args.problem)
    T, K, seed = _net_params(args, prob)
    ladder = args.eps or [0.4, 0.2, 0.1]
    controls = control_family(T, K, args.n_pieces, args.family_size, seed)
    # Truncate tightly so the sampled states are the attainable points to far below every ladder rung.
    points = sample_attainable_points(prob.A, prob.B, prob.psi0, T, K, min(ladder) * 1e-3, controls,
                                      n_times=args.n_times, cfg=_cfg(args))
    rows = [{"eps": e, "n_centers": covering_number(points, e)} for e in ladder]
    _emit({"n_points": len(points), "ladder": rows}, args.out)
    return 0


def cmd_obstruct(args) -> int:
    try:
        centers, radius, field = net_from_csv(Path(args.net).read_text())
    except OSError as exc:
        raise InvalidInputError(f"cannot read net file: {exc}") from exc
    net = EpsNet(centers, radius, len(centers))
    if args.targets_from_centers:
        targets = centers
    else:
        targets = unit_sphere_targets(args.n_targets, centers.shape[1], field == "complex", args.seed)
    report = obstruction_report(net, targets) if len(targets) else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["target_index", "distance"])
    for i, (_, d) in enumerate(report):
        writer.writerow([i, repr(d)])
    _write_text(buf.getvalue(), args.out)
    if report and args.out:
        dists = np.array([d for _, d in report])
        sys.stdout.write(json.dumps({"n_targets": len(dists), "median_distance": float(np.median(dists)),
                                     "min_distance": float(dists.min())}) + "\n")
    return 0


def cmd_gen(args) -> int:
    if args.list or not args.name:
        sys.stdout.write("\n".join(sorted(problems.CATALOGUE)) + "\n")
        return 0
    if args.name not in problems.CATALOGUE:
        raise InvalidInputError(f"unknown problem {args.name!r}; choose from {sorted(problems.CATALOGUE)}")
    prob = problems.CATALOGUE[args.name]()
    if args.out:
        dump_problem(prob, args.out)
    else:
        sys.stdout.write(json.dumps(prob.to_dict(), indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dysonreach", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def numerics(p):
        p.add_argument("--grid", type=int, default=16, help="grid points per control piece")
        p.add_argument("--max-order", type=int, default=60)
        p.add_argument("--out")

    p = sub.add_parser("propagate", help="propagate one problem to time t")
    p.add_argument("problem")
    p.add_argument("--t", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--method", choices=["dyson", "oracle", "picard"], default="dyson")
    p.add_argument("--steps", type=int, default=200, help="oracle steps / Picard grid per piece")
    p.add_argument("--iterations", type=int, default=30, help="Picard iterations")
    numerics(p)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("terms", help="norms of the Dyson terms against their bounds")
    p.add_argument("problem")
    p.add_argument("--t", type=float)
    p.add_argument("--p-max", type=int, default=12)
    numerics(p)
    p.set_defaults(func=cmd_terms)

    for name, func, help_ in (("net", cmd_net, "net of the sampled attainable set"),
                              ("cover", cmd_cover, "covering-number ladder of sampled attainable points")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("problem")
        if name == "net":
            p.add_argument("--eps", type=float)
            p.add_argument("--budget", type=int, default=50_000)
        else:
            p.add_argument("--eps", type=float, nargs="+")
        p.add_argument("--T", type=float)
        p.add_argument("--K", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--family-size", type=int, default=100)
        p.add_argument("--n-times", type=int, default=11)
        p.add_argument("--n-pieces", type=int, default=4)
        numerics(p)
        p.set_defaults(func=func)

    p = sub.add_parser("obstruct", help="distances from random unit-sphere targets to a net")
    p.add_argument("net")
    p.add_argument("--n-targets", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--targets-from-centers", action="store_true",
                   help="debug mode: use the net centers themselves as targets")
    p.add_argument("--out")
    p.set_defaults(func=cmd_obstruct)

    p = sub.add_parser("gen", help="write a built-in example problem file")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (CertificateUnreachableError, NetBudgetExceededError) as exc:
        sys.stderr.write(f"certificate error: {exc}\n")
        return EXIT_CERTIFICATE


if __name__ == "__main__":
    sys.exit(main())
