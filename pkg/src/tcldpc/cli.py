"""Command-line front end: ``python -m tcldpc <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .analysis import IsdEffort, code_min_weight_search, convergence_histogram, nearest_codewords
from .channel import ChannelParams, bit_error_probability
from .cltu import (RANDOMIZED_TAIL, TAIL_SEQUENCE, CltuConfig, StartDetectConfig, TsMode, build_cltu,
                   derandomized_body)
from .codes import CODE_NAMES, make_code
from .decoders import DecoderConfig
from .estimators import (StoppingRule, estimate_cer, estimate_pnat, p_md_analytic, run_tc_rejection)
from .gf2 import BitWord
from .scrambler import derandomize, randomize

SEED_ENV = "TCLDPC_SEED"


class UsageError(Exception):
    pass


def parse_ebn0(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) and comma-separated values, freely mixed."""
    out: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                fields = part.split(":")
                if len(fields) != 3:
                    raise ValueError
                start, stop, step = (float(f) for f in fields)
                if step <= 0 or stop < start:
                    raise ValueError
                count = int(math.floor((stop - start) / step + 1e-9)) + 1
                out.extend(round(start + i * step, 10) for i in range(count))
            else:
                out.append(float(part))
        except ValueError:
            raise UsageError(f"bad Eb/N0 list {text!r}; use start:stop:step or a comma list") from None
    if not out or not all(math.isfinite(v) for v in out):
        raise UsageError(f"bad Eb/N0 list {text!r}")
    return out


def _seed_default() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _decoder(args) -> DecoderConfig:
    clip = None if args.no_clip else args.clip
    return DecoderConfig(args.algo, args.max_iter, args.nmsa_factor, clip, not args.no_iter0_check)


def _rule(args) -> StoppingRule:
    return StoppingRule(args.target_events, args.max_trials)


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _records(header, rows, meta) -> str:
    return json.dumps({"schema_version": 1, "metadata": meta,
                       "rows": [dict(zip(header, r)) for r in rows]}, indent=2)


def _emit_table(args, header, rows, meta) -> str:
    return _records(header, rows, meta) if args.format == "json" else _table(header, rows)


# ---- subcommands -------------------------------------------------------------


def cmd_code(args) -> str:
    code = make_code(args.code)
    if args.action == "info":
        h = code.h
        info = {"code": code.name, "n": code.n, "k": code.k, "rate": code.rate,
                "circulant_size": code.qc_spec.m if code.qc_spec else None,
                "edges": h.nnz(), "row_weights": sorted(set(int(w) for w in h.row_weights())),
                "column_weights": sorted(set(int(w) for w in h.column_weights()))}
        if args.format == "json":
            return json.dumps(info, indent=2)
        return "".join(f"{k}: {v}\n" for k, v in info.items())
    matrix = code.h if args.matrix == "h" else code.g
    return matrix.to_alist() if args.export_format == "alist" else matrix.to_dense_text()


def _hex_arg(parts) -> BitWord:
    try:
        return BitWord.from_hex("".join(parts))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_randomize(args) -> str:
    word = _hex_arg(args.hex)
    fn = randomize if args.command == "randomize" else derandomize
    return fn(word).to_hex(group=args.group) + "\n"


def cmd_pmd(args) -> str:
    ebn0 = parse_ebn0(args.ebn0)
    rows = [(e, bit_error_probability(e), p_md_analytic(args.S, args.E, e)) for e in ebn0]
    return _emit_table(args, ("ebn0_db", "p_b", "p_md"), rows, {"S": args.S, "E": args.E})


def _campaign_meta(args, dec: DecoderConfig) -> dict:
    return {"code": args.code, "decoder": dec.label, "llr_clip_magnitude": dec.llr_clip_magnitude,
            "check_iteration_zero": dec.check_iteration_zero, "seed": args.seed,
            "target_events": args.target_events, "max_trials": args.max_trials}


def cmd_cer(args) -> str:
    code = make_code(args.code)
    dec = _decoder(args)
    rows = []
    for e in parse_ebn0(args.ebn0):
        r = estimate_cer(code, dec, ChannelParams(e, code.rate), _rule(args), args.seed, args.workers)
        lo, hi = r.cer.interval
        rows.append((e, r.trials, r.detected, r.undetected, r.cer.point, r.cer_star.point, r.ucer.point, lo, hi))
    header = ("ebn0_db", "trials", "detected", "undetected", "cer", "cer_star", "ucer", "cer_ci_low", "cer_ci_high")
    return _emit_table(args, header, rows, _campaign_meta(args, dec))


def cmd_pnat(args) -> str:
    code = make_code(args.code)
    dec = _decoder(args)
    if args.ts_mode == "none":
        raise UsageError("pnat needs --ts-mode randomized or derandomized")
    rows = []
    for e in parse_ebn0(args.ebn0):
        r = estimate_pnat(code, dec, ChannelParams(e, code.rate), args.ts_mode, _rule(args), args.seed, args.workers)
        lo, hi = r.interval
        rows.append((e, r.trials, r.events, r.point, lo, hi))
    meta = _campaign_meta(args, dec) | {"ts_mode": args.ts_mode}
    return _emit_table(args, ("ebn0_db", "trials", "successes", "p_nat", "ci_low", "ci_high"), rows, meta)


def cmd_tcrej(args) -> str:
    report = run_tc_rejection(args.code, _decoder(args), parse_ebn0(args.ebn0), args.n_codewords,
                              args.ts_mode, _rule(args), args.seed, StartDetectConfig(args.S, args.E),
                              args.workers)
    return report.to_json() if args.format == "json" else report.to_csv()


def _target(code, text: str) -> BitWord | None:
    named = {"t": TAIL_SEQUENCE, "t-prime": RANDOMIZED_TAIL}
    if text == "zero":
        return None
    word = named.get(text)
    if word is None:
        try:
            word = BitWord.from_hex(text, length=code.n)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if word.length != code.n:
        raise UsageError(f"target has {word.length} bits, code length is {code.n}")
    return word


def cmd_distance(args) -> str:
    code = make_code(args.code)
    effort = IsdEffort(args.iterations, args.p, args.ell, args.max_distance)
    target = _target(code, args.target)
    if target is None:
        report = code_min_weight_search(code, effort, args.seed)
    else:
        report = nearest_codewords(code, target, effort, args.seed)
    if args.format == "json":
        return report.to_json()
    return report.to_csv()


def cmd_histogram(args) -> str:
    code = make_code(args.code)
    if args.ts_mode == "none":
        raise UsageError("histogram needs --ts-mode randomized or derandomized")
    hist = convergence_histogram(code, _decoder(args), args.ts_mode, parse_ebn0(args.ebn0),
                                 args.trials_per_point, args.seed, args.workers)
    return hist.to_json() if args.format == "json" else hist.to_csv()


def cmd_cltu(args) -> str:
    cfg = CltuConfig(args.code, len(args.info), args.ts_mode)
    code = cfg.linear_code
    if args.action == "build":
        words = []
        for h in args.info:
            try:
                words.append(BitWord.from_hex(h, length=code.k))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        return build_cltu(words, cfg).to_hex() + "\n"
    raise UsageError(f"unknown cltu action {args.action!r}")


def cmd_cltu_parse(args) -> str:
    try:
        word = BitWord.from_hex("".join(args.hex))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    code = make_code(args.code)
    tail = 0 if args.ts_mode == "none" else 128
    body = word.length - 64 - tail
    if body <= 0 or body % code.n:
        raise UsageError(f"{word.length} bits is not a valid CLTU length for {code.name}")
    cfg = CltuConfig(args.code, body // code.n, args.ts_mode)
    blocks = derandomized_body(word, cfg)
    lines = []
    for i, b in enumerate(blocks):
        ok = code.is_codeword(b)
        lines.append(f"block {i}: {BitWord.from_bits(b).to_hex()} {'codeword' if ok else 'not-a-codeword'}")
    if tail:
        lines.append(f"tail: {randomize(BitWord.from_bits(word.bits()[-tail:])).to_hex()}")
    return "\n".join(lines) + "\n"


# ---- parser ----------------------------------------------------------------------


def _add_common_output(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, help="write data here (and a manifest beside it) instead of stdout")


def _add_decoder(p):
    p.add_argument("--code", choices=CODE_NAMES, default="ccsds-128-64")
    p.add_argument("--algo", choices=("spa", "msa", "nmsa"), default="spa")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--nmsa-factor", type=float, default=0.8)
    p.add_argument("--clip", type=float, default=30.0, help="LLR clip magnitude")
    p.add_argument("--no-clip", action="store_true")
    p.add_argument("--no-iter0-check", action="store_true", help="skip the syndrome check before iterating")


def _add_campaign(p, seed):
    p.add_argument("--ebn0", required=True, help="dB values: start:stop:step and/or comma list")
    p.add_argument("--target-events", type=int, default=100)
    p.add_argument("--max-trials", type=int, default=10 ** 8)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--workers", type=int, default=1)


def build_parser(seed: int = 0) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcldpc", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("code", help="code parameters and matrices")
    p.add_argument("action", choices=("info", "export"))
    p.add_argument("--code", choices=CODE_NAMES, default="ccsds-128-64")
    p.add_argument("--matrix", choices=("h", "g"), default="h")
    p.add_argument("--export-format", choices=("alist", "dense"), default="alist")
    _add_common_output(p)
    p.set_defaults(func=cmd_code)

    for name in ("randomize", "derandomize"):
        p = sub.add_parser(name, help=f"{name} a hex word (128-bit blocks)")
        p.add_argument("hex", nargs="+", help="hex digits; groups are joined")
        p.add_argument("--group", type=int, default=4, help="hex digits per output group (0 = none)")
        p.add_argument("--out", type=Path)
        p.set_defaults(func=cmd_randomize)

    p = sub.add_parser("pmd", help="start-sequence missed detection sweep")
    p.add_argument("--S", type=int, default=64)
    p.add_argument("--E", type=int, default=13)
    p.add_argument("--ebn0", required=True)
    _add_common_output(p)
    p.set_defaults(func=cmd_pmd)

    p = sub.add_parser("cer", help="codeword error rate campaign")
    _add_decoder(p)
    _add_campaign(p, seed)
    _add_common_output(p)
    p.set_defaults(func=cmd_cer)

    for name, func, modes, help_ in (
        ("pnat", cmd_pnat, ("randomized", "derandomized"), "tail-sequence miss campaign"),
        ("tcrej", cmd_tcrej, ("randomized", "derandomized", "none"), "full TC rejection breakdown"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_decoder(p)
        _add_campaign(p, seed)
        p.add_argument("--ts-mode", choices=modes, default="randomized")
        if name == "tcrej":
            p.add_argument("--n-codewords", type=int, default=1)
            p.add_argument("--S", type=int, default=64)
            p.add_argument("--E", type=int, default=13)
        _add_common_output(p)
        p.set_defaults(func=func)

    p = sub.add_parser("distance", help="nearest / low-weight codeword search")
    p.add_argument("--code", choices=CODE_NAMES, default="ccsds-128-64")
    p.add_argument("--target", default="t-prime", help="t, t-prime, zero, or a hex word")
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--ell", type=int, default=6)
    p.add_argument("--max-distance", type=int, default=16)
    p.add_argument("--seed", type=int, default=seed)
    _add_common_output(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("histogram", help="decoder convergence targets on the noisy tail")
    _add_decoder(p)
    p.add_argument("--ts-mode", choices=("randomized", "derandomized"), default="randomized")
    p.add_argument("--ebn0", default="0:7:1")
    p.add_argument("--trials-per-point", type=int, default=10000)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--workers", type=int, default=1)
    _add_common_output(p)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("cltu", help="build a noiseless CLTU as hex")
    p.add_argument("action", choices=("build",))
    p.add_argument("info", nargs="+", help="one hex infoword per codeword")
    p.add_argument("--code", choices=CODE_NAMES, default="ccsds-128-64")
    p.add_argument("--ts-mode", choices=("randomized", "derandomized", "none"), default="randomized")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_cltu)

    p = sub.add_parser("cltu-parse", help="de-randomize a noiseless hex CLTU and check its blocks")
    p.add_argument("hex", nargs="+")
    p.add_argument("--code", choices=CODE_NAMES, default="ccsds-128-64")
    p.add_argument("--ts-mode", choices=("randomized", "derandomized", "none"), default="randomized")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_cltu_parse)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest", type=Path)
    p.set_defaults(func=None)
    return parser


def _write_manifest(argv, args, elapsed):
    manifest = {
        "tool": "tcldpc", "version": __version__, "argv": list(argv),
        "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"},
        "outputs": [str(args.out)], "wall_clock_seconds": round(elapsed, 3),
    }
    path = args.out.with_name(args.out.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        seed = _seed_default()
        parser = build_parser(seed)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        if args.command == "replay":
            try:
                recorded = json.loads(args.manifest.read_text())["argv"]
            except (OSError, ValueError, KeyError) as exc:
                raise UsageError(f"cannot read manifest: {exc}") from None
            return main(recorded)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        t0 = time.perf_counter()
        try:
            text = args.func(args)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if not text.endswith("\n"):
            text += "\n"
        if args.out is None:
            sys.stdout.write(text)
        else:
            args.out.write_text(text)
            _write_manifest(argv, args, time.perf_counter() - t0)
    except UsageError as exc:
        print(f"tcldpc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
