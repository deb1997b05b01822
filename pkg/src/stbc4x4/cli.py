"""Command line entry point.

Exit codes: 0 success, 1 validation or assertion failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from pathlib import Path

from . import analysis, simulation
from .code import (DEFAULT_PHI, make_proposed_code, qam_constellation,
                   read_code, write_code)

PHI_HELP = (f"rotation angle in radians (default 0.5*arccos(1/5) = "
            f"{DEFAULT_PHI:.6f})")


class CheckFailed(Exception):
    pass


def _code(args):
    if getattr(args, "code", None):
        return read_code(args.code)
    return make_proposed_code(args.phi)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def cmd_simulate(args):
    config = simulation.load_config(args.config)
    points = simulation.run_cer(config, workers=args.threads)
    _emit(simulation.format_cer_csv(points), args.out)


def cmd_mindet(args):
    code = _code(args)
    if args.sample:
        rep = analysis.min_det_sample(code, args.spread, args.sample, args.seed)
    else:
        rep = analysis.min_det_search(code, args.spread, workers=args.threads)
    print(f"min |det| = {_fmt(rep.min_abs_det)}")
    print(f"  spread {rep.lattice_spread}, phi {code.phi!r} rad, "
          f"{rep.count_examined} difference vectors examined")
    print(f"  argmin {rep.argmin.tolist()}")
    if rep.next_level is not None:
        print(f"  next |det| level {_fmt(rep.next_level)}")
    if args.out:
        Path(args.out).write_text(
            "spread,phi,min_abs_det,count_examined,argmin\n"
            f"{rep.lattice_spread},{code.phi!r},{rep.min_abs_det!r},"
            f"{rep.count_examined},{' '.join(map(str, rep.argmin.tolist()))}\n")


def cmd_papr(args):
    code = _code(args)
    rep = analysis.papr(code, qam_constellation(args.m))
    print(f"PAPR {rep.value_db:.2f} dB ({args.m}-QAM)")
    if args.out:
        lines = ["m,antenna,papr_db"]
        lines += [f"{args.m},{n + 1},{v!r}" for n, v in enumerate(rep.papr_db)]
        Path(args.out).write_text("\n".join(lines) + "\n")


def cmd_verify_nvd(args):
    rep = analysis.verify_nvd_appendix(args.bound, args.dioph_bound, args.phi)
    print(rep.summary())
    if not rep.passed:
        raise CheckFailed("NVD certification found counterexamples")


def cmd_decode_check(args):
    n0s = tuple(float(v) for v in args.n0.split(","))
    rep = simulation.decoder_agreement(args.m, args.nr, args.trials, n0s,
                                       args.seed)
    print(f"{rep.trials} trials, {rep.m}-QAM, N_R={args.nr}, N0 in {list(n0s)}")
    print(f"  agreement on non-tie trials: {rep.agree_non_tie}/{rep.non_tie}"
          f" = {rep.agreement_rate:.6f}")
    print(f"  ties (exhaustive top-2 within 1e-9): {rep.ties}, "
          f"of which decided differently: {rep.disagree_tie}")
    print(f"  metric evaluations per codeword: conditional "
          f"{rep.conditional_evals}, exhaustive {rep.exhaustive_evals}")
    if rep.disagree_non_tie:
        raise CheckFailed(f"{rep.disagree_non_tie} non-tie disagreements")


def cmd_sweep_phi(args):
    sw = analysis.phi_sweep(args.grid, args.spread, workers=args.threads)
    buf = io.StringIO()
    buf.write("phi,min_abs_det\n")
    for phi, val in sw.curve:
        buf.write(f"{phi!r},{val!r}\n")
    _emit(buf.getvalue(), args.out)
    print(f"best phi {sw.best_phi:.6f} rad (grid index {sw.best_index}), "
          f"min |det| {_fmt(sw.best_value)}; reference 0.5*arccos(1/5) = "
          f"{DEFAULT_PHI:.6f}", file=sys.stderr if not args.out else sys.stdout)


def cmd_export_code(args):
    write_code(make_proposed_code(args.phi), args.out)
    print(f"wrote {args.out}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stbc4x4",
        description="Rate-1 full-diversity 4x4 STBC: encoding, conditional "
                    "ML decoding, minimum-determinant certification, PAPR "
                    "and CER simulation.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def threads(sp):
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads, a speed hint only (default 1)")

    sp = sub.add_parser("simulate", help="Monte Carlo codeword error rate")
    sp.add_argument("--config", required=True,
                    help="key = value file with SimConfig fields "
                         "(snr_db_list in dB per receive antenna, "
                         "comma separated)")
    sp.add_argument("--out", help="CSV path (default: stdout)")
    threads(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("mindet", help="minimum |det| over a difference lattice")
    sp.add_argument("--spread", type=int, required=True,
                    help="differences range over even integers in "
                         "[-spread, spread]; 2, 4 or 6 for exhaustive search")
    sp.add_argument("--phi", type=float, default=DEFAULT_PHI, help=PHI_HELP)
    sp.add_argument("--code", help="weight-matrix text file instead of the "
                                   "built-in code")
    sp.add_argument("--sample", type=int, default=0,
                    help="random lattice points to draw instead of "
                         "enumerating (for spread > 6)")
    sp.add_argument("--seed", type=int, default=0,
                    help="seed for --sample (default 0)")
    sp.add_argument("--out", help="also write the report as CSV")
    threads(sp)
    sp.set_defaults(func=cmd_mindet)

    sp = sub.add_parser("papr", help="peak-to-average power ratio in dB")
    sp.add_argument("--m", type=int, required=True, help="QAM size")
    sp.add_argument("--phi", type=float, default=DEFAULT_PHI, help=PHI_HELP)
    sp.add_argument("--code", help="weight-matrix text file")
    sp.add_argument("--out", help="also write per-antenna PAPR (dB) as CSV")
    sp.set_defaults(func=cmd_papr)

    sp = sub.add_parser("verify-nvd",
                        help="numeric certification of the NVD proof")
    sp.add_argument("--bound", type=int, default=2,
                    help="difference lattice bound, even, <= 6 (default 2)")
    sp.add_argument("--dioph-bound", type=int, default=20,
                    help="box for the Diophantine gap check (default 20)")
    sp.add_argument("--phi", type=float, default=DEFAULT_PHI, help=PHI_HELP)
    sp.set_defaults(func=cmd_verify_nvd)

    sp = sub.add_parser("decode-check",
                        help="conditional vs exhaustive ML agreement")
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--m", type=int, default=4, help="QAM size (default 4)")
    sp.add_argument("--nr", type=int, default=1,
                    help="receive antennas (default 1)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n0", default="0.5,2,8",
                    help="comma-separated noise powers N0, linear "
                         "(default 0.5,2,8)")
    sp.set_defaults(func=cmd_decode_check)

    sp = sub.add_parser("sweep-phi", help="min |det| versus phi on [0, pi/2]")
    sp.add_argument("--grid", type=int, default=256,
                    help="grid points (default 256)")
    sp.add_argument("--spread", type=int, default=2,
                    help="lattice spread, 2 or 4 (default 2)")
    sp.add_argument("--out", help="CSV path with columns phi (rad), "
                                  "min_abs_det (default: stdout)")
    threads(sp)
    sp.set_defaults(func=cmd_sweep_phi)

    sp = sub.add_parser("export-code",
                        help="write the weight matrices as text")
    sp.add_argument("--out", required=True)
    sp.add_argument("--phi", type=float, default=DEFAULT_PHI, help=PHI_HELP)
    sp.set_defaults(func=cmd_export_code)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if hasattr(args, "phi") and not math.isfinite(args.phi):
        parser.print_usage(sys.stderr)
        print("error: --phi must be finite", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
