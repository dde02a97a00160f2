"""Command-line entry point: ``esdlink {analyze,sweep,simulate,design,reproduce}``.

Exit codes: 0 ok, 2 invalid input, 3 infeasible parameters, 4 unsatisfiable
constraints, 5 Monte Carlo disagreement, 70 internal error.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .analytics import N_CAP, EsdDesign, UndefinedRatioError, link_metrics
from .design import DesignQuery, InfeasibleDesignError, Objective, feasibility_report, optimize
from .montecarlo import RareEventError, RngSeed, compare_to_analytic, simulate_link
from .params import (
    LinkParams,
    ParameterError,
    Variant,
    load_config,
    params_from_mapping,
    params_to_mapping,
    transmission_rate,
    validate,
)
from .reproduce import DEFAULT_DESIGNS, FIGURES, fmt_number, grid_sweep, log_grid, reproduce, t_sweep, to_csv

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_UNSATISFIABLE, EXIT_DISAGREE, EXIT_INTERNAL = 0, 2, 3, 4, 5, 70


class InputError(Exception):
    pass


def _design_list(text: str) -> list[EsdDesign]:
    designs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            n, k = (int(v) for v in item.split(":"))
            designs.append(EsdDesign(n, k))
        except ValueError as exc:
            raise InputError(f"--designs: bad entry {item!r} (expected n:k): {exc}") from None
    if not designs:
        raise InputError("--designs: empty design list")
    return designs


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value parameter file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key (repeatable)")
    p.add_argument("--t", type=float, help="transmission rate; overrides the channel")
    p.add_argument("--alpha", type=float, help="attenuation in dB/km")
    p.add_argument("--length", type=float, help="distance in km")
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--base10", action="store_true", help="use t = 10^(-alpha l / 10)")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esdlink",
        description="Closed-form metrics, Monte Carlo checks and (n, k) design search "
                    "for empty-signal detection links.")
    parser.add_argument("--version", action="version", version=f"esdlink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form metrics for one (t, n, k) point")
    _common(p)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--k", type=int, default=0)

    p = sub.add_parser("sweep", help="CSV over a t range or over the (n, k) grid")
    _common(p)
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--points", type=int, default=141)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--designs", help="comma-separated n:k list")
    p.add_argument("--n-max", type=int, help="sweep the full 0 <= k <= n <= N grid at fixed t")

    p = sub.add_parser("simulate", help="Monte Carlo estimate checked against the closed forms")
    _common(p)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream-id", type=int, default=0)
    p.add_argument("--mode", choices=["direct", "conditional"], default="direct")
    p.add_argument("--no-importance", action="store_true",
                   help="plain sampling of both branches in conditional mode")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("design", help="pick the best (n, k) under constraints")
    _common(p)
    p.add_argument("--n-max", type=int, default=9)
    p.add_argument("--objective", choices=[o.value for o in Objective], default=Objective.MAX_NESR.value)
    p.add_argument("--qber-max", type=float)
    p.add_argument("--nesr-min", type=float)

    p = sub.add_parser("reproduce", help="figure tables, SVG charts and claim checks")
    _common(p)
    p.add_argument("--figure", required=True)
    p.add_argument("--designs", help="designs for the NESR/QBER-vs-t panels")
    return parser


def resolve_params(args: argparse.Namespace) -> LinkParams:
    mapping: dict[str, object] = {}
    if args.config:
        mapping.update(load_config(args.config))
    for item in args.set:
        if "=" not in item:
            raise InputError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        mapping[key.strip()] = value.strip()
    params = params_from_mapping(mapping)
    channel = params.channel
    if args.alpha is not None:
        channel = replace(channel, alpha=args.alpha)
    if args.length is not None:
        channel = replace(channel, length=args.length)
    if args.variant is not None:
        channel = replace(channel, variant=Variant(args.variant))
    if args.base10:
        channel = replace(channel, base10=True)
    params = replace(params, channel=channel)
    report = validate(params)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if report.errors:
        raise ParameterError("; ".join(report.errors))
    return params


def resolve_t(args: argparse.Namespace, params: LinkParams) -> float:
    if args.t is not None:
        if not 0 < args.t <= 1:
            raise InputError(f"--t must lie in (0, 1], got {args.t!r}")
        return args.t
    return transmission_rate(params.channel)


def manifest(args: argparse.Namespace, params: LinkParams, extra: dict[str, object]) -> str:
    lines = [f"tool=esdlink", f"version={__version__}", f"command={args.command}"]
    lines += [f"{k}={v}" for k, v in params_to_mapping(params).items()]
    lines.append(f"channel.base10={str(params.channel.base10).lower()}")
    if args.config:
        lines.append(f"config={args.config}")
    lines += [f"{k}={v}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"


def emit(args: argparse.Namespace, params: LinkParams, extra: dict[str, object],
         files: dict[str, str], stdout_text: str) -> None:
    """Write outputs plus manifest to --out, or print (manifest to stderr)."""
    text = manifest(args, params, extra)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.txt").write_text(text)
        for name, body in files.items():
            (out / name).write_text(body)
    else:
        sys.stderr.write(text)
    sys.stdout.write(stdout_text)


def _metric_lines(m) -> list[str]:
    return [
        f"t={fmt_number(m.t)}", f"n={m.design.n}", f"k={m.design.k}",
        f"p_s={fmt_number(m.p_s)}", f"q_s={fmt_number(m.q_s)}",
        f"p_tail={fmt_number(m.p_tail)}", f"q_tail={fmt_number(m.q_tail)}",
        f"nesr={fmt_number(m.nesr)}", f"s_esd={fmt_number(m.s_esd)}",
        f"qber={fmt_number(m.qber)}", f"rate={fmt_number(m.rate)}",
    ]


def cmd_analyze(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    t = resolve_t(args, params)
    design = EsdDesign(args.n, args.k)
    m = link_metrics(t, design, params)
    lines = _metric_lines(m) + feasibility_report(params).lines()
    report = "\n".join(lines) + "\n"
    emit(args, params, {"t": repr(t), "n": args.n, "k": args.k}, {"analyze.txt": report}, report)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    if args.n_max is not None:
        if args.n_max < 0:
            raise InputError("--n-max must be non-negative")
        if args.n_max > N_CAP:
            raise InputError(f"--n-max exceeds the cap {N_CAP}")
        t = resolve_t(args, params)
        rows = grid_sweep(t, params, args.n_max)
        extra = {"t": repr(t), "n_max": args.n_max}
    else:
        if (args.t_min is None) != (args.t_max is None):
            raise InputError("--t-min and --t-max must be given together")
        if args.t_min is not None:
            if args.points < 1 or not 0 < args.t_min <= args.t_max <= 1:
                raise InputError("empty t range: need 0 < t-min <= t-max <= 1 and --points >= 1")
            ts = log_grid(args.t_min, args.t_max, args.points)
        else:
            ts = [resolve_t(args, params)]
        if args.designs:
            designs = _design_list(args.designs)
        elif args.n is not None or args.k is not None:
            designs = [EsdDesign(args.n or 0, args.k or 0)]
        else:
            designs = list(DEFAULT_DESIGNS)
        rows = t_sweep(ts, designs, params)
        extra = {"t_values": len(ts), "t_min": repr(min(ts)), "t_max": repr(max(ts)),
                 "designs": ",".join(f"{d.n}:{d.k}" for d in designs)}
    text = to_csv(rows)
    emit(args, params, extra, {"sweep.csv": text}, text if not args.out else "")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    t = resolve_t(args, params)
    design = EsdDesign(args.n, args.k)
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    seed = RngSeed(args.seed, args.stream_id)
    sim = simulate_link(t, design, params, args.trials, seed, args.mode,
                        importance=not args.no_importance, workers=max(1, args.workers))
    analytic = link_metrics(t, design, params)
    verdict = compare_to_analytic(sim, analytic)
    lines = [sim.summary().rstrip("\n")]
    lines += [f"analytic.{name}={fmt_number(getattr(analytic, name))}"
              for name in ("p_tail", "q_tail", "nesr", "s_esd", "qber")]
    lines += [f"verdict.{line}" for line in verdict.lines()]
    lines.append(f"verdict={'agree' if verdict.passed else 'disagree'}")
    report = "\n".join(lines) + "\n"
    emit(args, params, {"t": repr(t), "n": args.n, "k": args.k, "trials": args.trials,
                        "seed": args.seed, "stream_id": args.stream_id, "mode": args.mode,
                        "importance": str(not args.no_importance).lower()},
         {"simulate.txt": report}, report)
    return EXIT_OK if verdict.passed else EXIT_DISAGREE


def cmd_design(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    t = resolve_t(args, params)
    if args.n_max > N_CAP:
        raise InputError(f"--n-max exceeds the cap {N_CAP}")
    try:
        query = DesignQuery(Objective(args.objective), args.n_max, args.qber_max, args.nesr_min)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    feas = feasibility_report(params)
    lines = feas.lines()
    extra = {"t": repr(t), "n_max": args.n_max, "objective": args.objective,
             "qber_max": args.qber_max, "nesr_min": args.nesr_min}
    if not feas.feasible:
        lines.append("result=infeasible parameters")
        report = "\n".join(lines) + "\n"
        emit(args, params, extra, {"design.txt": report}, report)
        return EXIT_INFEASIBLE
    try:
        best = optimize(t, params, query)
    except InfeasibleDesignError as exc:
        lines.append(f"result=unsatisfiable ({exc})")
        report = "\n".join(lines) + "\n"
        emit(args, params, extra, {"design.txt": report}, report)
        return EXIT_UNSATISFIABLE
    lines.append(f"result=n={best.design.n} k={best.design.k}")
    lines += _metric_lines(best.metrics)
    report = "\n".join(lines) + "\n"
    emit(args, params, extra, {"design.txt": report}, report)
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    if args.figure not in FIGURES:
        raise InputError(f"--figure must be one of {', '.join(FIGURES)}, got {args.figure!r}")
    params = resolve_params(args)
    designs = _design_list(args.designs) if args.designs else list(DEFAULT_DESIGNS)
    rep = reproduce(args.figure, params, designs)
    out = Path(args.out or f"figures/{args.figure}")
    rep.write(out)
    args.out = str(out)
    emit(args, params, {"figure": args.figure,
                        "designs": ",".join(f"{d.n}:{d.k}" for d in designs)}, {}, rep.summary())
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "design": cmd_design,
    "reproduce": cmd_reproduce,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except (InputError, ParameterError, RareEventError, UndefinedRatioError, ValueError) as exc:
        print(f"esdlink {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover
        print(f"esdlink {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
