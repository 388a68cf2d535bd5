"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 key error, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import random
import secrets
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import analysis, battery
from .bench import bench
from .cipher import decrypt_stream, encrypt_stream
from .coremap import MapParams, PerturbedMap, keystream
from .errors import (BadHeader, DistinctnessViolation, InsufficientData, KeyMismatch,
                     NonInvertibleDifference, UnsupportedWidth)
from .generator import RawKeyBlob, Trident, TridentKey, key_schedule

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_KEY = 3
EXIT_DATA = 4

FIGURES = {
    "fig1": dict(n=16, s=16, a0=5, delta_a=0, c0=1, delta_c=0, x0=0),
    "fig2a": dict(n=16, s=16, a0=5, delta_a=4, c0=1, delta_c=4, x0=0),
    "fig2b": dict(n=16, s=8, a0=5, delta_a=4, c0=1, delta_c=4, x0=0),
}


class KeyLoadError(Exception):
    """Wraps any failure to load or schedule a key."""


class UsageError(Exception):
    pass


def _int(text: str) -> int:
    return int(text, 0)


def load_key(args) -> TridentKey:
    try:
        if args.key_file is not None:
            blob = RawKeyBlob.from_bytes(Path(args.key_file).read_bytes())
        elif args.key_hex is not None:
            blob = RawKeyBlob.from_hex(args.key_hex)
        else:
            raise UsageError("a key is required: pass --key-file or --key-hex")
        return key_schedule(blob, s=args.s)
    except (OSError, ValueError) as exc:
        raise KeyLoadError(str(exc)) from exc


def _add_key_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--key-file", help="binary key: 15 little-endian n-bit words")
    g.add_argument("--key-hex", help="the same key as a hex string")
    p.add_argument("--s", type=int, default=None, help="right shift (default n/2)")


def _add_map_args(p: argparse.ArgumentParser, **defaults) -> None:
    fig = p.add_mutually_exclusive_group()
    for name in FIGURES:
        fig.add_argument(f"--{name}", action="store_const", const=name, dest="preset",
                         help=f"use the {name} parameter set")
    p.add_argument("--n", type=int, default=defaults.get("n", 16))
    p.add_argument("--s", type=int, default=None, help="right shift (default n)")
    p.add_argument("--a0", type=_int, default=5)
    p.add_argument("--da", type=_int, default=0)
    p.add_argument("--c0", type=_int, default=1)
    p.add_argument("--dc", type=_int, default=0)
    p.add_argument("--x0", type=_int, default=0)


def map_params(args) -> MapParams:
    if args.preset:
        return MapParams(**FIGURES[args.preset])
    try:
        return MapParams(n=args.n, s=args.n if args.s is None else args.s, a0=args.a0,
                         delta_a=args.da, c0=args.c0, delta_c=args.dc, x0=args.x0)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


@contextmanager
def _output(path: str | None, binary: bool):
    if path in (None, "-"):
        yield sys.stdout.buffer if binary else sys.stdout
    else:
        with open(path, "wb" if binary else "w") as fh:
            yield fh


@contextmanager
def _input(path: str):
    if path == "-":
        yield sys.stdin.buffer
    else:
        with open(path, "rb") as fh:
            yield fh


def _emit_json(obj, path: str | None = None) -> None:
    with _output(path, binary=False) as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def cmd_keygen(args) -> int:
    n = args.n
    if n % 8:
        raise UsageError("n must be a multiple of 8")
    rng = random.Random(secrets.randbits(256))
    while True:
        blob = RawKeyBlob.random(rng, n)
        try:
            key_schedule(blob)
        except DistinctnessViolation:
            continue
        break
    if args.hex:
        with _output(args.out, binary=False) as fh:
            fh.write(blob.hex() + "\n")
    else:
        with _output(args.out, binary=True) as fh:
            fh.write(blob.to_bytes())
    return EXIT_OK


def cmd_gen(args) -> int:
    key = load_key(args)
    if args.nbytes < 0:
        raise UsageError("nbytes must be non-negative")
    gen = Trident(key)
    remaining = args.nbytes
    with _output(args.out, binary=True) as fh:
        while remaining:
            take = min(remaining, 1 << 20)
            fh.write(gen.read(take))
            remaining -= take
    return EXIT_OK


def cmd_encrypt(args) -> int:
    key = load_key(args)
    with _input(args.input) as fin, _output(args.out, binary=True) as fout:
        encrypt_stream(key, fin, fout)
    return EXIT_OK


def cmd_decrypt(args) -> int:
    key = load_key(args)
    with _input(args.input) as fin, _output(args.out, binary=True) as fout:
        decrypt_stream(key, fin, fout)
    return EXIT_OK


def cmd_return_map(args) -> int:
    params = map_params(args)
    dump = analysis.return_map(params, args.points)
    with _output(args.out, binary=False) as fh:
        fh.write(dump.to_csv(header=args.header))
    return EXIT_OK


def cmd_period(args) -> int:
    stats = analysis.measure_periods(args.family, args.n, args.trials, s=args.s,
                                     seed=args.seed, cap=args.cap,
                                     with_sample_periods=args.sample_periods)
    _emit_json(stats.to_dict(), args.out)
    return EXIT_OK


def cmd_bitplane(args) -> int:
    params = map_params(args)
    seq = keystream(params, args.count)
    _emit_json({"n": params.n, "count": args.count,
                "per_bit_periods": analysis.bitplane_periods(seq, params.n)}, args.out)
    return EXIT_OK


def cmd_birthday(args) -> int:
    params = map_params(args)
    seq = keystream(params, args.count)
    m = params.modulus
    expected = analysis.birthday_expected(m, args.count)
    observed = analysis.distinct_count(seq)
    out = {"m": m, "N": args.count, "expected_distinct": expected,
           "observed_distinct": observed}
    if args.mc_trials:
        sigma = analysis.birthday_sigma(m, args.count, args.mc_trials, seed=args.seed)
        out.update(sigma=sigma, z=(observed - expected) / sigma if sigma else None)
    _emit_json(out, args.out)
    return EXIT_OK


def cmd_attack(args) -> int:
    try:
        samples = [int(v, 0) for v in args.samples.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --samples: {exc}") from exc
    rec = analysis.lcg_recover(samples, 1 << args.n)
    _emit_json(rec.to_dict(), args.out)
    return EXIT_OK


def cmd_trident_period(args) -> int:
    if args.key_file or args.key_hex:
        keys = [load_key(args)]
    else:
        rng = random.Random(args.seed)
        keys = [analysis.random_small_key(rng, args.n, s=args.s) for _ in range(args.keys)]
    reports = [analysis.trident_period_study(k, cap=args.cap).to_dict() for k in keys]
    _emit_json(reports if len(reports) > 1 else reports[0], args.out)
    return EXIT_OK


def _test_source(args):
    if args.source == "trident":
        key = load_key(args)
        words, n = Trident(key).words, key.n
    elif args.source == "lcg":
        params = analysis.sample_params(random.Random(args.seed), 64, "lcg")
        words, n = PerturbedMap(params).take, 64
    elif args.source == "map":
        params = analysis.sample_params(random.Random(args.seed), 64, "full", s=args.map_s)
        words, n = PerturbedMap(params).take, 64
    else:
        return battery.uniform_source(args.seed)
    if args.view == "lsb":
        return battery.bitplane_source(words, 0)
    return battery.word_source(words, n)


def cmd_test(args) -> int:
    if args.length % 8:
        raise UsageError("--len must be a multiple of 8")
    if args.k < 1:
        raise UsageError("--k must be positive")
    if args.source == "trident" and args.key_file is None and args.key_hex is None:
        raise UsageError("--source trident needs --key-file or --key-hex")
    report = battery.run_battery(_test_source(args), k=args.k, length_bits=args.length,
                                 alpha=args.alpha)
    if args.json:
        _emit_json(report.to_dict(), args.out)
    else:
        with _output(args.out, binary=False) as fh:
            fh.write(report.render_table() + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.seconds <= 0:
        raise UsageError("--seconds must be positive")
    if args.key_file or args.key_hex:
        key = load_key(args)
    else:
        key = key_schedule(RawKeyBlob.random(random.Random(0), 64))
    rep = bench(key, seconds=args.seconds, runs=args.runs)
    _emit_json(rep.to_dict(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trident", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="write a fresh random key")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--hex", action="store_true", help="write hex text instead of binary")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("gen", help="write raw keystream bytes")
    _add_key_args(p)
    p.add_argument("--nbytes", type=int, required=True)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_gen)

    for name, fn in (("encrypt", cmd_encrypt), ("decrypt", cmd_decrypt)):
        p = sub.add_parser(name, help=f"{name} a file with the keystream")
        _add_key_args(p)
        p.add_argument("input", help="input path, or - for stdin")
        p.add_argument("-o", "--out")
        p.set_defaults(func=fn)

    an = sub.add_parser("analyze", help="dynamical analyses")
    asub = an.add_subparsers(dest="analysis", required=True)

    p = asub.add_parser("return-map", help="CSV of consecutive orbit pairs")
    _add_map_args(p)
    p.add_argument("--points", type=int, default=1 << 16)
    p.add_argument("--header", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_return_map)

    p = asub.add_parser("period", help="state periods over random in-class parameters")
    p.add_argument("--class", dest="family", choices=["lcg", "dyn", "full"], default="full")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=analysis.DEFAULT_CAP)
    p.add_argument("--sample-periods", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_period)

    p = asub.add_parser("bitplane", help="period of each output bit")
    _add_map_args(p)
    p.add_argument("--count", type=int, default=1 << 12)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_bitplane)

    p = asub.add_parser("birthday", help="distinct samples against the birthday formula")
    _add_map_args(p)
    p.add_argument("--count", type=int, default=1 << 18)
    p.add_argument("--mc-trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_birthday)

    p = asub.add_parser("attack", help="recover a plain LCG from consecutive outputs")
    p.add_argument("--samples", required=True, help="comma-separated consecutive outputs")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_attack)

    p = asub.add_parser("trident-period", help="joint vs component periods at small n")
    _add_key_args(p)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--keys", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=analysis.DEFAULT_CAP)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_trident_period)

    p = sub.add_parser("test", help="run the randomness battery")
    _add_key_args(p)
    p.add_argument("--source", choices=["trident", "lcg", "map", "uniform"], default="trident")
    p.add_argument("--view", choices=["words", "lsb"], default="words",
                   help="whole words, or bit 0 of each word")
    p.add_argument("--map-s", type=int, default=32)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--len", dest="length", type=int, default=1_000_000)
    p.add_argument("--alpha", type=float, default=battery.ALPHA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("bench", help="keystream throughput")
    _add_key_args(p)
    p.add_argument("--seconds", type=float, default=1.0, help="length of each timed run")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"trident: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KeyLoadError, KeyMismatch, DistinctnessViolation) as exc:
        print(f"trident: key error: {exc}", file=sys.stderr)
        return EXIT_KEY
    except (BadHeader, InsufficientData, NonInvertibleDifference, UnsupportedWidth) as exc:
        print(f"trident: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"trident: i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
