"""Command-line entry point: ``dimlab <command> ...``.

Rationals cross the boundary as ``p/q`` strings.  JSON goes to stdout with
sorted keys; CSV goes to the path given with ``--csv``/``--dump`` (or to
stdout with ``--format csv``).  ``DIMLAB_SEED`` overrides ``--seed``.

Exit status: 0 on success, 1 when a computed check fails, 2 on bad input or a
violated precondition.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .boxlab import ROW_CAP, dimension_report, ratio_profile
from .digitsets import (
    CoverTooLarge,
    DigitSet,
    Kind,
    Membership,
    cover_lines,
    enumerate_cover,
    exact_cover_count,
    member,
)
from .dilation import (
    NotInRequiredSet,
    build_power_blocks,
    ef_partial_sum,
    exceptional_diagnostics,
    ip_density_condition,
    ip_sequence,
    ip_term,
    ip_term_exponents,
    orbit,
    separation_bound_check,
)
from .massdist import BlockMeasure, holder_check, interval_log2_measure, sample
from .numerics import parse_point
from .schedule import (
    ScheduleError,
    free_ratio_profile,
    growth_violations,
    load_schedule,
    prime_shift,
    synthesize,
    tied_ratio_profile,
)

DIGIT_LIMIT = 64


class UsageError(Exception):
    pass


def _q(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a rational: {text!r}") from exc


def parse_positions(text: str) -> list[int]:
    """``"1,2,5-7"`` -> [1, 2, 5, 6, 7]."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write_csv(path: str | None, header, rows) -> None:
    text = _csv_text(header, rows)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _seed(args) -> int:
    env = os.environ.get("DIMLAB_SEED")
    if env is not None and env.strip():
        return int(env)
    return args.seed


def _digit_set(args) -> DigitSet:
    if args.kind == "free_at":
        if not args.positions:
            raise UsageError("--kind free_at needs --positions")
        return DigitSet.free_at(parse_positions(args.positions))
    if args.schedule is None:
        raise UsageError("--schedule is required")
    kind = {"free": Kind.FREE_BLOCKS, "tied": Kind.TIED_BLOCKS}[args.kind]
    return DigitSet(kind, load_schedule(args.schedule))


def _profile_rows(s, tied: bool):
    over_a, over_b = (tied_ratio_profile if tied else free_ratio_profile)(s)
    rows = [(over_a.kind.value, *r) for r in over_a.csv_rows()]
    rows += [(over_b.kind.value, *r) for r in over_b.csv_rows()]
    return rows


# -- commands ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    d = parse_rational(args.d)
    if not 0 <= d <= 1:
        raise UsageError(f"--d must lie in [0, 1], got {d}")
    if args.blocks < 2:
        raise UsageError("--blocks must be at least 2")
    syn = synthesize(d, args.blocks)
    s = syn.base
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(s.to_json() + "\n")
    problems = growth_violations(s)
    d1, d2 = free_ratio_profile(s)
    if args.format == "csv":
        _write_csv(None, ("kind", "k", "numerator", "denominator", "decimal"),
                   _profile_rows(s, False))
    else:
        _emit({"a": list(s.a), "b": list(s.b), "target_d": _q(d),
               "quotients_b_over_next_a": [_q(v) for v in syn.quotients()],
               "d1": [_q(v) for v in d1.values], "d2": [_q(v) for v in d2.values],
               "growth_checks_pass": not problems, "problems": problems})
    return 0 if not problems else 1


def cmd_dims(args) -> int:
    dset = _digit_set(args)
    n_max = dset.depth if args.n_max is None else args.n_max
    if n_max > dset.depth:
        raise UsageError(f"--n-max {n_max} is beyond the schedule prefix (b_K = {dset.depth})")
    window = tuple(args.window) if args.window else None
    report = dimension_report(dset, window=window, row_cap=min(n_max, ROW_CAP))
    rows = ratio_profile(dset, min(n_max, ROW_CAP))
    header = ("n", "log2_count", "empirical", "ratio", "decimal")
    if args.format == "csv":
        _write_csv(None, header, rows.csv_rows())
    else:
        _emit(report.to_dict())
    if args.csv:
        _write_csv(args.csv, header, rows.csv_rows())
    return 0 if report.passed else 1


def cmd_cover(args) -> int:
    dset = _digit_set(args)
    if args.count is not None:
        c = exact_cover_count(dset, args.count)
        _emit(c.to_dict(with_count=c.log2_count <= 4096))
        return 0
    if args.k is None:
        raise UsageError("give --k for an enumeration or --count for a count")
    try:
        pts = enumerate_cover(dset, args.k, args.variant, cap=args.cap)
    except CoverTooLarge as exc:
        raise UsageError(f"{exc} (log2 cardinality {exc.log2_size})") from exc
    sys.stdout.write(cover_lines(pts))
    return 0


def cmd_measure(args) -> int:
    s = load_schedule(args.schedule)
    m = BlockMeasure(s, args.kind)
    if not 0 <= args.l < (1 << args.n):
        raise UsageError(f"--l must lie in 0..2^{args.n} - 1")
    e = interval_log2_measure(m, (args.l, args.n))
    out = {"n": args.n, "l": args.l, "log2_measure": e,
           "measure": "0" if e is None else f"1/{1 << -e}" if -e <= 4096 else None}
    _emit(out)
    return 0


def cmd_holder(args) -> int:
    s = load_schedule(args.schedule)
    m = BlockMeasure(s, args.kind)
    d = parse_rational(args.d)
    eps = parse_rational(args.eps) if args.eps is not None else None
    try:
        res = holder_check(m, d, eps, args.n_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit({"d": _q(res.d), "eps": _q(res.eps), "max_log2_ratio": _q(res.max_log2_ratio),
           "threshold_log2": _q(res.threshold), "worst_depth": res.worst_depth,
           "pass": res.passed})
    if args.csv:
        _write_csv(args.csv, ("depth", "worst_atom_l", "log2_ratio", "decimal"), res.csv_rows())
    return 0 if res.passed else 1


def cmd_orbit(args) -> int:
    s = load_schedule(args.schedule)
    if args.x is not None and args.sample_from_measure:
        raise UsageError("give either --x or --sample-from-measure")
    if args.sample_from_measure:
        x = sample(BlockMeasure(prime_shift(s)), s.depth, _seed(args))
    elif args.x is not None:
        try:
            x = parse_point(args.x)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        raise UsageError("give --x or --sample-from-measure")

    power = build_power_blocks(s)
    notices = []
    if args.ip:
        gens = list(power.exponents() if len(power) <= args.generators
                    else (power.exponent(i) for i in range(1, args.generators + 1)))
        seq = ip_sequence(exponents=gens)
    else:
        seq = power
    N = len(seq) if args.N is None else min(args.N, len(seq))
    out = {"x": x.to_digit_string(DIGIT_LIMIT), "depth": x.depth,
           "sequence": "ip" if args.ip else "power_blocks", "terms": N, "seed": None}
    if args.sample_from_measure:
        out["seed"] = _seed(args)

    try:
        shifted = prime_shift(s)
    except ScheduleError:
        shifted = None
        notices.append("a_i + i < b_i fails, so X(a', b) is undefined; bound checks skipped")
    if shifted is not None:
        verdict = member(x, DigitSet(Kind.FREE_BLOCKS, shifted))
        out["member_x_a_prime_b"] = verdict.value
        if verdict is Membership.NO:
            notices.append("x is not in X(a', b); separation check skipped")
        else:
            try:
                out["separation"] = separation_bound_check(x, s).to_dict()
            except NotInRequiredSet as exc:  # pragma: no cover - guarded above
                notices.append(str(exc))
    diag = exceptional_diagnostics(x, seq, N, m=args.m)
    out["diagnostics"] = diag.to_dict()
    if args.h_max:
        out["ip_density"] = [r.to_dict() for r in ip_density_condition(x, s, args.h_max)]
    out["notices"] = notices

    if args.dump:
        count = min(N, args.dump_limit)
        # one record at a time: a deep record holds a full-width value
        rows = [orbit(x, seq, 1, start=n)[0].csv_row(DIGIT_LIMIT) for n in range(1, count + 1)]
        _write_csv(args.dump, ("index", "exponents", "value", "distance_log2_bound"), rows)
        if count < N:
            notices.append(f"orbit dump holds the first {count} of {N} terms")
    _emit(out)
    sep = out.get("separation")
    return 1 if sep is not None and not sep["passed"] else 0


def cmd_ip(args) -> int:
    if args.generators:
        gens = [int(g) for g in args.generators.split(",") if g.strip()]
        if any(g <= 0 for g in gens):
            raise UsageError("generators must be positive")
        terms = [(l, ip_term(gens, l)) for l in _ip_indices(args, len(gens))]
        rows = [(l, str(t)) for l, t in terms]
    else:
        if args.schedule is None:
            raise UsageError("give --generators or --schedule")
        power = build_power_blocks(load_schedule(args.schedule))
        count = min(args.count, len(power))
        exps = [power.exponent(i) for i in range(1, count + 1)]
        rows = [(l, " ".join(str(e) for e in ip_term_exponents(exps, l)))
                for l in _ip_indices(args, count)]
    _write_csv(None, ("l", "term" if args.generators else "exponents"), rows)
    return 0


def _ip_indices(args, count: int) -> range:
    top = (1 << count) - 1
    if args.l is not None:
        if not 1 <= args.l <= top:
            raise UsageError(f"--l must lie in 1..{top}")
        return range(args.l, args.l + 1)
    return range(1, min(top, args.limit) + 1)


def cmd_report(args) -> int:
    s = load_schedule(args.schedule)
    out = {"schedule": {"a": list(s.a), "b": list(s.b)}}
    ok = True
    for kind in (Kind.FREE_BLOCKS, Kind.TIED_BLOCKS):
        rep = dimension_report(DigitSet(kind, s), row_cap=min(s.depth, args.row_cap))
        out[kind.value] = rep.to_dict()
        ok &= rep.passed
    # the smallest a-quotient inside the sweep: the exponent the finite prefix supports
    n_max = min(s.depth, args.row_cap)
    over_a, _ = free_ratio_profile(s)
    seen = [e.value for e in over_a.entries if s.a[e.k] <= n_max]
    d = min(seen, default=Fraction(0))
    if d > 0:
        res = holder_check(BlockMeasure(s, "free"), min(Fraction(1), d), None, n_max)
        out["holder"] = {"d": _q(res.d), "eps": _q(res.eps), "pass": res.passed,
                         "max_log2_ratio": _q(res.max_log2_ratio)}
        ok &= res.passed
    if args.samples:
        try:
            shifted = prime_shift(s)
        except ScheduleError:
            shifted = None
        if shifted is not None:
            seq = build_power_blocks(s)
            seed = _seed(args)
            rows = []
            for j in range(args.samples):
                x = sample(BlockMeasure(shifted), s.depth, seed + j)
                sep = separation_bound_check(x, s)
                below = ef_partial_sum(x, seq) < 1
                rows.append({"seed": seed + j, "separation_pass": sep.passed,
                             "worst_margin_log2": sep.worst_margin, "ef_below_one": below})
                ok &= sep.passed and below
            out["samples"] = rows
    _emit(out)
    return 0 if ok else 1


# -- parser ---------------------------------------------------------------------------------


def _add_set_args(p, kinds=("free", "tied", "free_at")):
    p.add_argument("--schedule", help="inline JSON {\"a\":[...],\"b\":[...]} or a file path")
    p.add_argument("--kind", choices=kinds, default="free")
    p.add_argument("--positions", help="free positions for --kind free_at, e.g. 1,2,5-7")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dimlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dimlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="build a schedule with a target dimension")
    p.add_argument("--d", required=True, help="target dimension, e.g. 1/3")
    p.add_argument("--blocks", type=int, default=10)
    p.add_argument("--out", help="write the schedule JSON here")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("dims", help="dimension report and ratio profile")
    _add_set_args(p)
    p.add_argument("--n-max", type=int)
    p.add_argument("--window", type=int, nargs=2, metavar=("K_LO", "K_HI"))
    p.add_argument("--csv", help="write the profile rows here")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("cover", help="enumerate a cover set or count atoms")
    _add_set_args(p)
    p.add_argument("--k", type=int)
    p.add_argument("--variant", choices=("prime", "double_prime"))
    p.add_argument("--count", type=int, metavar="N", help="print the exact count at depth N")
    p.add_argument("--cap", type=int, default=2 ** 24)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("measure", help="measure of a dyadic atom")
    p.add_argument("--schedule", required=True)
    p.add_argument("--kind", choices=("free", "tied"), default="free")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("holder", help="Hölder sweep of a block measure")
    p.add_argument("--schedule", required=True)
    p.add_argument("--kind", choices=("free", "tied"), default="free")
    p.add_argument("--d", required=True)
    p.add_argument("--eps")
    p.add_argument("--n-max", type=int)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_holder)

    p = sub.add_parser("orbit", help="orbit diagnostics for a point")
    p.add_argument("--schedule", required=True)
    p.add_argument("--x", help="0.1011 or 0x<hex>:<depth>")
    p.add_argument("--sample-from-measure", action="store_true",
                   help="draw x from the measure on X(a', b) at depth b_K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--N", type=int, help="number of orbit terms (default: all)")
    p.add_argument("--h-max", type=int, default=0)
    p.add_argument("--ip", action="store_true", help="use the IP-sequence of the gap powers")
    p.add_argument("--generators", type=int, default=16,
                   help="how many gap powers generate the IP-sequence")
    p.add_argument("--m", type=int, default=4, help="gap-statistic resolution")
    p.add_argument("--dump", help="write orbit records as CSV here")
    p.add_argument("--dump-limit", type=int, default=256)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("ip", help="terms of an IP-sequence")
    p.add_argument("--generators", help="comma-separated positive integers")
    p.add_argument("--schedule", help="use the gap powers of this schedule")
    p.add_argument("--count", type=int, default=8, help="number of gap powers used")
    p.add_argument("--l", type=int)
    p.add_argument("--limit", type=int, default=64)
    p.set_defaults(func=cmd_ip)

    p = sub.add_parser("report", help="everything about one schedule")
    p.add_argument("--schedule", required=True)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--row-cap", type=int, default=ROW_CAP)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ScheduleError, ValueError, OSError) as exc:
        sys.stderr.write(f"dimlab {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
