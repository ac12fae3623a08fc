"""Command-line entry point: ``errorfloor <task> [flags]`` or ``errorfloor run MANIFEST``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .errors import ErrorFloorError, InvalidManifest
from .experiment import TASKS, ExperimentManifest, run


def parse_grid(text: str, kind=float) -> list:
    """``a,b,c`` or an inclusive range ``start:stop:step`` (pieces may be mixed with commas)."""
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            start, stop, step = (float(v) for v in part.split(":"))
            if step <= 0:
                raise argparse.ArgumentTypeError(f"range step must be positive in {part!r}")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            values += [kind(round(start + i * step, 10)) for i in range(count)]
        else:
            values.append(kind(part))
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _ints(text: str) -> list[int]:
    return parse_grid(text, int)


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--manifest", help="JSON manifest; flags override its fields")
    p.add_argument("--code", default=S, help="tanner155 | margulis:P | alist:PATH")
    p.add_argument("--seed", dest="master_seed", type=int, default=S, help="master seed")
    p.add_argument("--out", default=S, help="output directory")
    p.add_argument("--workers", type=int, default=S,
                   help="process pool width (default: $ERRORFLOOR_WORKERS or 1)")
    p.add_argument("-v", "--verbose", action="store_true")


def _search_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--iters", type=_ints, default=S)
    p.add_argument("--attempts", type=int, default=S)
    p.add_argument("--mode", choices=("hard", "soft"), default=S)
    p.add_argument("--restarts", type=int, default=S)
    p.add_argument("--max-evals", dest="max_evals", type=int, default=S)
    p.add_argument("--simplex-scale", dest="simplex_scale", type=float, default=S)
    p.add_argument("--mask-file", dest="mask_file", default=S)
    p.add_argument("--seed-point-file", dest="seed_point_file", default=S)
    p.add_argument("--verify", action="store_true", default=S,
                   help="verify the best record on the computational tree")
    p.add_argument("--depth", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="errorfloor",
                                     description="Instanton and Monte-Carlo error-floor analysis of LDPC codes.")
    sub = parser.add_subparsers(dest="task", required=True)

    p = sub.add_parser("run", help="execute a manifest file")
    p.add_argument("manifest_file")
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--out", default=S)
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("code-info", help="print code parameters")
    _common(p)

    p = sub.add_parser("decode", help="decode one sampled frame or a given channel output")
    _common(p)
    p.add_argument("--iters", type=_ints, default=S)
    p.add_argument("--snr-db", dest="snr_db", type=parse_grid, default=S)
    p.add_argument("--frame", type=int, default=S)
    p.add_argument("--input-file", dest="input_file", default=S)

    p = sub.add_parser("mc-sweep", help="Monte-Carlo FER over an SNR x iteration grid")
    _common(p)
    p.add_argument("--iters", type=_ints, default=S)
    p.add_argument("--snr-db", dest="snr_db", type=parse_grid, default=S)
    p.add_argument("--max-frames", dest="max_frames", type=int, default=S)
    p.add_argument("--target-errors", dest="target_errors", type=int, default=S)
    p.add_argument("--guard-l2", dest="guard_l_sq", type=float, default=S,
                   help="skip cells whose projected FER exp(-l2 s^2/2) is below 1e-7")
    p.add_argument("--force", action="store_true", default=S)

    p = sub.add_parser("instanton-search", help="independent amoeba attempts")
    _common(p)
    _search_flags(p)
    p.add_argument("--bin-width", dest="bin_width", type=float, default=S)

    p = sub.add_parser("biased-search", help="masked or codeword-seeded search; several --iters "
                       "values follow the optimum through them in order")
    _common(p)
    _search_flags(p)
    p.add_argument("--mask", type=_ints, default=S, help="bits the search may move, e.g. 0,5,9")
    p.add_argument("--codeword", type=_ints, default=S, help="support of a codeword to seed from")
    p.add_argument("--codeword-weight", dest="codeword_weight", type=int, default=S,
                   help="find a codeword of this weight and seed from it")
    p.add_argument("--mask-record", dest="mask_record", default=S,
                   help="instanton record whose tree-coefficient support is the mask")
    p.add_argument("--masked-attempts", dest="masked_attempts", type=int, default=S,
                   help="independent masked runs; the best seeds the unmasked phase")
    p.add_argument("--followup-restarts", dest="followup_restarts", type=int, default=S)
    p.add_argument("--followup-max-evals", dest="followup_max_evals", type=int, default=S)
    p.add_argument("--no-followup", dest="followup", action="store_false", default=S,
                   help="skip the unmasked second phase")

    p = sub.add_parser("spectrum", help="re-aggregate instanton records into a spectrum")
    _common(p)
    p.add_argument("--source", default=S, help="directory of a previous instanton-search")
    p.add_argument("--bin-width", dest="bin_width", type=float, default=S)

    p = sub.add_parser("ct-verify", help="computational-tree verification of a record")
    _common(p)
    p.add_argument("--record", default=S)
    p.add_argument("--depth", type=int, default=S)

    p = sub.add_parser("report", help="render data files and figures from result directories")
    _common(p)
    p.add_argument("--sources", nargs="+", default=S)
    p.add_argument("--instantons", type=parse_grid, default=S, help="l2 values to overlay")
    p.add_argument("--d-min", dest="d_min", type=int, default=S,
                   help="Hamming distance for the codeword asymptote (default: the code's known value)")
    p.add_argument("--no-figures", dest="figures", action="store_false", default=S)
    return parser


_NOT_PARAMS = {"task", "manifest", "manifest_file", "verbose", "code", "master_seed", "out"}


def manifest_from_args(args: argparse.Namespace) -> ExperimentManifest:
    ns = vars(args)
    top = {k: ns[k] for k in ("code", "master_seed", "out") if k in ns}
    if args.task == "run":
        path = args.manifest_file
    elif ns.get("manifest"):
        path = args.manifest
    else:
        params = {k: v for k, v in ns.items() if k not in _NOT_PARAMS and k in TASKS[args.task]}
        return ExperimentManifest(task=args.task, params=params, **top)
    m = ExperimentManifest.load(path)
    if args.task != "run" and m.task != args.task:
        raise InvalidManifest(f"manifest is for task {m.task!r}, not {args.task!r}")
    params = {k: v for k, v in ns.items() if k not in _NOT_PARAMS and k in TASKS[m.task]}
    return m.override(**top, **params)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        manifest = manifest_from_args(args)
        return run(manifest, getattr(args, "workers", None))
    except ErrorFloorError as exc:
        print(f"errorfloor: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
