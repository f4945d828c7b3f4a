"""Command-line entry point: run, sweep, audit, gen and oracle subcommands.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import auctions, facility, harness, house, instances, io, scheduling
from .core import DataError, DomainError
from .facility import ConvergenceError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="PATH", help="write data here instead of stdout")
    p.add_argument("--pretty", action="store_true", help="indent JSON output for humans")


def _unit_interval(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= x < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {text}")
    return x


def _positive_int(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {k}")
    return k


def _seed(text: str) -> int:
    try:
        s = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError("must be a 64-bit unsigned integer")
    return s


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="recmech", description="Strategyproof mechanisms that take a recommended outcome.")
    sub = root.add_subparsers(dest="command", required=True, parser_class=_Parser)

    # run
    run = sub.add_parser("run", help="run one mechanism on one instance")
    rsub = run.add_subparsers(dest="mech", required=True, parser_class=_Parser)
    for name, helptext in (("facility-mbb", "Minimum Bounding Box (egalitarian)"), ("facility-cmp", "Coordinatewise Median with Predictions (utilitarian)")):
        p = rsub.add_parser(name, help=helptext)
        p.add_argument("--input", required=True, metavar="CSV", help="points, header x,y or lon,lat")
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--advice", metavar="X,Y", help="recommended location")
        g.add_argument("--advice-file", metavar="CSV", help="one-row CSV holding x,y")
        if name == "facility-cmp":
            p.add_argument("--lambda", dest="lam", type=_unit_interval, default=0.0, help="copies of the advice: floor(lambda*n); in [0,1)")
            p.add_argument("--tie-break", choices=["low", "high"], default="low", help="even-length median rule")
        _add_output(p)
    p = rsub.add_parser("scheduling-asg", help="AllocationScaledGreedy with per-job weighted VCG payments")
    p.add_argument("--input", required=True, metavar="CSV", help="row 'n,m' then n rows of m times (inf allowed)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--advice", metavar="I,I,...", help="recommended machine (0-based) per job")
    g.add_argument("--advice-file", metavar="CSV", help="one-row CSV of machine indices")
    p.add_argument("--beta", type=float, default=1.0, help="confidence in [1, n]; 1 trusts the advice most")
    p.add_argument("--oracle", choices=["on", "off"], default="on", help="compute the exact optimum (n**m <= 1e6)")
    _add_output(p)
    p = rsub.add_parser("house-ttc", help="Top Trading Cycles from the recommended endowment")
    p.add_argument("--input", required=True, metavar="CSV", help="n rows of n values")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--advice", metavar="H,H,...", help="recommended house per agent, 1-based")
    g.add_argument("--advice-file", metavar="CSV", help="one-row CSV of 1-based houses")
    p.add_argument("--normalization", choices=[n.value for n in house.Normalization], default="none", help="validated row normalization")
    _add_output(p)
    p = rsub.add_parser("multiunit-mir", help="whole-bundle MIR auction plus the recommended allocation")
    p.add_argument("--input", required=True, metavar="CSV", help="row 'n,m' then n curves of m+1 values")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--advice-counts", dest="advice", metavar="Q,Q,...", help="recommended item count per bidder")
    g.add_argument("--advice-file", metavar="CSV", help="one-row CSV of counts")
    p.add_argument("--oracle", choices=["on", "off"], default="on", help="compute the exact optimum")
    _add_output(p)

    # sweep
    sw = sub.add_parser("sweep", help="tabulate rho_hat, eta and ratio over many recommendations")
    ssub = sw.add_subparsers(dest="mech", required=True, parser_class=_Parser)
    for name in ("facility-cmp", "facility-mbb"):
        p = ssub.add_parser(name, help=f"{name} over a k x k grid of predictions")
        p.add_argument("--input", required=True, metavar="CSV", help="points, header x,y or lon,lat")
        p.add_argument("--grid", type=_positive_int, default=10, metavar="K", help="grid side length")
        if name == "facility-cmp":
            p.add_argument("--lambda", dest="lam", type=_unit_interval, default=0.0, help="CMP confidence in [0,1)")
            p.add_argument("--tie-break", choices=["low", "high"], default="low", help="even-length median rule")
        p.add_argument("--format", choices=["csv", "json"], default="csv", help="csv table or JSON lines")
        _add_output(p)
    p = ssub.add_parser("random", help="seeded random instances of a setting")
    p.add_argument("--setting", required=True, choices=["scheduling", "house-unit-range", "house-unit-sum", "house-none", "multiunit"], help="instance family to sample")
    p.add_argument("--count", type=_positive_int, default=100, help="number of instances")
    p.add_argument("--seed", type=_seed, default=0, help="64-bit seed")
    p.add_argument("--beta", type=float, default=None, help="scheduling confidence (clamped to [1, n]); default n")
    p.add_argument("--format", choices=["csv", "json"], default="csv", help="csv table or JSON lines")
    _add_output(p)

    # audit
    au = sub.add_parser("audit", help="empirical strategyproofness checks")
    asub = au.add_subparsers(dest="mech", required=True, parser_class=_Parser)
    p = asub.add_parser("sp", help="sample unilateral misreports and report utility gains")
    p.add_argument("--setting", required=True, choices=[s.value for s in harness.Setting], help="mechanism to audit")
    p.add_argument("--trials", type=_positive_int, default=1000, help="number of sampled instances")
    p.add_argument("--seed", type=_seed, default=0, help="64-bit seed")
    p.add_argument("--fault", choices=["negate-payments"], default=None, help="inject a known bug (scheduling only) to check the auditor")
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1, help="worker processes; output does not depend on it")
    _add_output(p)

    # gen
    gen = sub.add_parser("gen", help="write a named adversarial instance")
    gen.add_argument("--named", required=True, choices=list(instances.NAMED_KEYS), help="which adversarial family to build")
    gen.add_argument("--rho", type=float, default=None, help="target recommendation quality")
    gen.add_argument("--m", type=int, default=None, help="size parameter of fl-worst-sum")
    gen.add_argument("--n", type=int, default=None, help="machines / agents")
    gen.add_argument("--beta", type=float, default=None, help="scheduling confidence")
    gen.add_argument("--eps", type=float, default=None, help="perturbation (default 1e-6; 0.1 for sched-jump)")
    gen.add_argument("--advice-out", metavar="PATH", help="also write the recommendation as a one-row CSV")
    _add_output(gen)

    # oracle
    orc = sub.add_parser("oracle", help="exact optimum of an instance")
    osub = orc.add_subparsers(dest="setting", required=True, parser_class=_Parser)
    for name, helptext in (
        ("facility-egalitarian", "minimum enclosing circle"),
        ("facility-utilitarian", "geometric median"),
        ("scheduling", "minimum makespan by enumeration"),
        ("house", "maximum-welfare matching"),
        ("multiunit", "maximum-welfare item split"),
    ):
        p = osub.add_parser(name, help=helptext)
        p.add_argument("--input", required=True, metavar="CSV", help="instance file in the setting's format")
        if name == "house":
            p.add_argument("--normalization", choices=[n.value for n in house.Normalization], default="none", help="validated row normalization")
        _add_output(p)
    return root


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        try:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise DataError(f"cannot write output ({exc.strerror})", args.out) from None
    else:
        sys.stdout.write(text)


def _advice_text(args) -> str:
    if args.advice is not None:
        return args.advice
    return ",".join(io.read_advice_file(args.advice_file))


def _outcome_dict(out, alternative) -> dict:
    d = out.report.to_dict()
    d["alternative"] = list(alternative)
    d["payments"] = list(out.payments)
    return d


def _cmd_run(args) -> None:
    if args.mech.startswith("facility"):
        pts = io.ingest_points_csv(args.input)
        adv = io.parse_point(_advice_text(args))
        if args.mech == "facility-mbb":
            out = facility.mbb(pts, adv)
        else:
            out = facility.cmp(pts, adv, facility.CmpConfig(args.lam, facility.TieBreak(args.tie_break)))
        d = out.report.to_dict()
        d["facility_x"], d["facility_y"] = out.alternative.x, out.alternative.y
    elif args.mech == "scheduling-asg":
        inst = io.read_scheduling_csv(args.input)
        adv = io.parse_int_list(_advice_text(args), "advice")
        if not 1.0 <= args.beta <= inst.n:
            raise UsageError(f"--beta must lie in [1, n={inst.n}], got {args.beta}")
        out = scheduling.asg(inst, adv, scheduling.AsgConfig(args.beta), oracle=args.oracle == "on")
        d = _outcome_dict(out, out.alternative)
    elif args.mech == "house-ttc":
        v = io.read_valuations_csv(args.input, args.normalization)
        adv = tuple(h - 1 for h in io.parse_int_list(_advice_text(args), "advice"))
        out = house.ttc(v, adv)
        d = _outcome_dict(out, [h + 1 for h in out.alternative])
    else:
        inst = io.read_multiunit_csv(args.input)
        adv = io.parse_int_list(_advice_text(args), "advice")
        out = auctions.mir_with_advice(inst, adv, oracle=args.oracle == "on")
        d = _outcome_dict(out, out.alternative)
    _emit(args, io.dumps(d, args.pretty))


def _cmd_sweep(args) -> None:
    if args.mech == "random":
        rows = harness.run_random_sweep(args.setting, args.count, args.seed, args.beta)
    else:
        pts = io.ingest_points_csv(args.input)
        if args.mech == "facility-cmp":
            rows = harness.run_cmp_sweep(pts, args.grid, args.lam, facility.TieBreak(args.tie_break))
        else:
            rows = harness.run_facility_sweep(pts, args.grid, "mbb")
    _emit(args, io.sweep_csv(rows) if args.format == "csv" else io.sweep_jsonl(rows))


def _cmd_audit(args) -> None:
    if args.fault and args.setting != "scheduling":
        raise UsageError("--fault negate-payments applies only to --setting scheduling")
    rep = harness.audit_sp(args.setting, args.seed, args.trials, fault=args.fault, threads=args.threads)
    _emit(args, io.dumps(rep.to_dict(), args.pretty))


def _instance_csv(inst) -> str:
    if isinstance(inst, facility.FacilityInstance):
        return io.matrix_csv(inst.points, ("x", "y"))
    if isinstance(inst, scheduling.SchedulingInstance):
        return f"{inst.n},{inst.m}\n" + io.matrix_csv(inst.costs)
    if isinstance(inst, house.ValuationMatrix):
        return io.matrix_csv(inst.values)
    raise TypeError(type(inst))


def _advice_serial(named) -> list:
    adv = named.advice
    if isinstance(adv, facility.Point2):
        return [adv.x, adv.y]
    if isinstance(named.instance, house.ValuationMatrix):
        return [h + 1 for h in adv]
    return list(adv)


def _cmd_gen(args) -> None:
    params = {k: v for k, v in (("rho", args.rho), ("m", args.m), ("n", args.n), ("beta", args.beta), ("eps", args.eps)) if v is not None}
    named = instances.build(args.named, **params)
    adv = _advice_serial(named)
    if args.advice_out:
        try:
            with open(args.advice_out, "w") as fh:
                fh.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in adv) + "\n")
        except OSError as exc:
            raise DataError(f"cannot write advice ({exc.strerror})", args.advice_out) from None
    if args.out:
        _emit(args, _instance_csv(named.instance))
        meta = {"key": named.key, "params": named.params, "advice": adv, "instance": args.out}
        if isinstance(named.instance, house.ValuationMatrix):
            meta["normalization"] = named.instance.normalization.value
        sys.stdout.write(io.dumps(meta, args.pretty) + "\n")
    else:
        sys.stdout.write(_instance_csv(named.instance))


def _cmd_oracle(args) -> None:
    if args.setting.startswith("facility"):
        pts = io.ingest_points_csv(args.input)
        obj = facility.FacilityObjective(args.setting.split("-")[1])
        p, val = facility.optimal_location(pts, obj)
        d = {"alternative": [p.x, p.y], "value": val}
    elif args.setting == "scheduling":
        a, val = scheduling.opt_makespan(io.read_scheduling_csv(args.input))
        d = {"alternative": list(a), "value": val}
    elif args.setting == "house":
        m, val = house.opt_matching(io.read_valuations_csv(args.input, args.normalization))
        d = {"alternative": [h + 1 for h in m], "value": val}
    else:
        a, val = auctions.mu_opt(io.read_multiunit_csv(args.input))
        d = {"alternative": list(a), "value": val}
    _emit(args, io.dumps(d, args.pretty))


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "audit": _cmd_audit, "gen": _cmd_gen, "oracle": _cmd_oracle}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, DomainError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
