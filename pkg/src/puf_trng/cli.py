"""Batch command-line front end.

Subcommands: ``puf new``, ``generate``, ``test``, ``selftest``,
``report show``.  Exit codes are stable contracts: 0 pass, 1 statistical
fail, 2 usage error, 3 starvation, 4 I/O error.  Every generated stream
or report is paired with a ``.manifest.json`` recording the full
configuration, so it can be regenerated bit-exactly (``--from-manifest``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, battery as battery_mod, bitio, ent as ent_mod, selftest as selftest_mod
from .errors import ParameterError, PufTrngError, StarvationError
from .generator import (
    DEFAULT_TAPS,
    GeneratorConfig,
    TapSet,
    config_from_dict,
    config_to_dict,
    generate,
)
from .puf import (
    DEFAULT_ARBITER_OFFSET,
    DEFAULT_INSTANCE_SEED,
    DEFAULT_N_STAGES,
    DEFAULT_SIGMA_NOISE,
    DEFAULT_SIGMA_PROCESS,
    PufParameters,
    load_instance,
    sample_puf,
    save_instance,
)

MANIFEST_FORMAT = "puf-trng.manifest"
MANIFEST_VERSION = 1

EXIT_OK = 0
EXIT_STATISTICAL_FAIL = 1
EXIT_USAGE = 2
EXIT_STARVATION = 3
EXIT_IO = 4


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(path: Path, doc: dict) -> None:
    doc = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "tool_version": __version__,
        "created_utc": _utc_now(),
        **doc,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _read_manifest(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MANIFEST_FORMAT:
        raise ParameterError(f"not a manifest file: {path}")
    return doc


def _parse_taps(text: str) -> TapSet:
    try:
        positions = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ParameterError(f"taps must be comma-separated integers, got {text!r}")
    return TapSet.from_positions(positions)


def _puf_params_from_args(args) -> PufParameters:
    return PufParameters(
        n_stages=args.stages,
        sigma_process=args.sigma_process,
        sigma_noise=args.sigma_noise,
        arbiter_offset=args.offset,
        instance_seed=args.seed,
    )


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_puf_new(args) -> int:
    instance = sample_puf(_puf_params_from_args(args))
    save_instance(instance, args.out)
    print(f"wrote instance ({instance.n_stages} stages) to {args.out}")
    return EXIT_OK


def _cmd_generate(args) -> int:
    if args.from_manifest:
        manifest = _read_manifest(args.from_manifest)
        config = config_from_dict(manifest["generator_config"])
        n_bits = int(manifest["n_bits"])
    else:
        if args.bits is None:
            raise ParameterError("--bits is required (or use --from-manifest)")
        if args.instance:
            instance = load_instance(args.instance)
            params = instance.params
        else:
            params = _puf_params_from_args(args)
        config = GeneratorConfig(
            puf_params=params,
            taps=_parse_taps(args.taps),
            register_seed=args.register_seed,
            noise_seed=args.noise_seed,
            max_evaluations_per_bit=args.max_evals_per_bit,
        )
        n_bits = args.bits

    stream = generate(config, n_bits)
    config_doc = config_to_dict(config)
    out = Path(args.out)
    bitio.save_bitstream(out, stream, config_doc)
    _write_manifest(
        Path(str(out) + ".manifest.json"),
        {
            "command": "generate",
            "n_bits": n_bits,
            "generator_config": config_doc,
            "outputs": {
                "stream": str(out),
                "metadata": str(bitio.metadata_path(out)),
            },
        },
    )
    stats = stream.stats
    print(
        f"generated {stream.length_bits} bits in {stats.evaluations} evaluations "
        f"(validity rate {stats.validity_rate:.6f}) -> {out}"
    )
    return EXIT_OK


def _load_input_bits(path: str, bits_exact: int | None) -> tuple[np.ndarray, bytes]:
    """Returns (bit array, byte view) of a stream file or raw byte file."""
    p = Path(path)
    if bitio.metadata_path(p).exists():
        stream, _meta = bitio.load_bitstream(p)
        full_bytes = stream.length_bits // 8
        return stream.bits(), stream.data[:full_bytes]
    data = p.read_bytes()
    n_bits = bits_exact if bits_exact is not None else 8 * len(data)
    if n_bits > 8 * len(data):
        raise ParameterError(f"--bits-exact {n_bits} exceeds file size of {8 * len(data)} bits")
    return bitio.unpack_bits(data, n_bits), data[: n_bits // 8]


def _battery_config_from_args(args) -> battery_mod.BatteryConfig:
    return battery_mod.BatteryConfig(
        alpha=args.alpha,
        sequence_length_bits=args.sequence_length,
        sequence_count=args.sequence_count,
        block_frequency_block_size=args.block_frequency_m,
        approximate_entropy_m=args.apen_m,
        serial_m=args.serial_m,
        linear_complexity_block_size=args.lc_m,
    )


def _cmd_test(args) -> int:
    if args.from_manifest:
        manifest = _read_manifest(args.from_manifest)
        input_path = manifest["input"]["path"]
        bits_exact = manifest["input"].get("bits_exact")
        which = manifest["battery"]
        config = battery_mod.BatteryConfig(**manifest["battery_config"])
    else:
        input_path = args.input
        bits_exact = args.bits_exact
        which = args.battery
        config = _battery_config_from_args(args)
        if input_path is None:
            raise ParameterError("--input is required (or use --from-manifest)")

    bits, byte_view = _load_input_bits(input_path, bits_exact)

    report_doc: dict = {"report_version": battery_mod.REPORT_VERSION, "report_type": which}
    verdict = True
    if which in ("nist", "all"):
        sequences = battery_mod.split_sequences(bits, config)
        nist_report = battery_mod.run_battery(sequences, config)
        report_doc["nist"] = battery_mod.report_to_dict(nist_report)
        verdict = verdict and nist_report.verdict
    if which in ("ent", "all"):
        ent_report = ent_mod.ent_metrics(byte_view)
        ent_ok, issues = ent_mod.ent_verdict(ent_report)
        report_doc["ent"] = ent_mod.report_to_dict(ent_report, ent_ok, issues)
        verdict = verdict and ent_ok
    report_doc["verdict"] = verdict

    rendered = json.dumps(report_doc, indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(rendered, encoding="utf-8")
        _write_manifest(
            Path(str(args.report) + ".manifest.json"),
            {
                "command": "test",
                "battery": which,
                "battery_config": config.to_dict(),
                "input": {
                    "path": str(input_path),
                    "bits_exact": bits_exact,
                    "sha256": hashlib.sha256(Path(input_path).read_bytes()).hexdigest(),
                },
                "outputs": {"report": str(args.report)},
            },
        )
        print(f"report written to {args.report}")
    else:
        sys.stdout.write(rendered)
    _print_summary(report_doc)
    return EXIT_OK if verdict else EXIT_STATISTICAL_FAIL


def _print_summary(report_doc: dict) -> None:
    if "nist" in report_doc:
        for line in report_doc["nist"]["proportions"]:
            flag = "pass" if line["verdict"] else "FAIL"
            print(
                f"  {line['test_name']:28s} {line['passed']:4d}/{line['total']:<4d} "
                f"(bound {line['lower_bound']:.4f})  {flag}"
            )
    if "ent" in report_doc:
        flag = "pass" if report_doc["ent"]["verdict"] else "FAIL"
        m = report_doc["ent"]["metrics"]
        print(
            f"  ent: entropy {m['entropy_bits_per_byte']:.6f} b/B, mean {m['mean']:.4f}, "
            f"pi {m['monte_carlo_pi']:.6f}, scc {m['serial_correlation']:.6f}  {flag}"
        )
    print(f"verdict: {'pass' if report_doc.get('verdict') else 'FAIL'}")


def _cmd_selftest(args) -> int:
    ok, results = selftest_mod.run_selftest()
    for r in results:
        print(f"{'ok  ' if r.ok else 'FAIL'} {r.name}: {r.detail}")
    print(f"selftest: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_STATISTICAL_FAIL


def _cmd_report_show(args) -> int:
    doc = json.loads(Path(args.path).read_text(encoding="utf-8"))
    if "proportions" in doc:  # bare battery report
        doc = {"nist": doc, "verdict": doc.get("verdict")}
    if "metrics" in doc:  # bare ent report
        doc = {"ent": doc, "verdict": doc.get("verdict")}
    _print_summary(doc)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _add_puf_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--stages", type=int, default=DEFAULT_N_STAGES)
    parser.add_argument("--sigma-process", type=float, default=DEFAULT_SIGMA_PROCESS)
    parser.add_argument("--sigma-noise", type=float, default=DEFAULT_SIGMA_NOISE)
    parser.add_argument("--offset", type=float, default=DEFAULT_ARBITER_OFFSET)
    parser.add_argument("--seed", type=int, default=DEFAULT_INSTANCE_SEED,
                        help="instance seed (process-variation draw)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="puf-trng",
        description="PUF-fed shift-register TRNG: generation and statistical validation.",
    )
    parser.add_argument("--version", action="version", version=f"puf-trng {__version__}")
    sub = parser.add_subparsers(dest="command")

    puf = sub.add_parser("puf", help="PUF instance management")
    puf_sub = puf.add_subparsers(dest="puf_command")
    puf_new = puf_sub.add_parser("new", help="sample and save a PUF instance")
    _add_puf_param_flags(puf_new)
    puf_new.add_argument("--out", required=True)
    puf_new.set_defaults(func=_cmd_puf_new)

    gen = sub.add_parser("generate", help="generate a bitstream")
    gen.add_argument("--instance", help="PUF instance JSON (default: sample from flags)")
    _add_puf_param_flags(gen)
    gen.add_argument("--bits", type=int)
    gen.add_argument("--taps", default=",".join(str(t) for t in sorted(DEFAULT_TAPS.taps, reverse=True)))
    gen.add_argument("--register-seed", type=int, default=1)
    gen.add_argument("--noise-seed", type=int, default=0)
    gen.add_argument("--max-evals-per-bit", type=int, default=1000)
    gen.add_argument("--from-manifest", help="reproduce a previous run's configuration")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_generate)

    test = sub.add_parser("test", help="run statistical batteries on a stream")
    test.add_argument("--input")
    test.add_argument("--battery", choices=("nist", "ent", "all"), default="all")
    test.add_argument("--report", help="write the JSON report here (default: stdout)")
    test.add_argument("--bits-exact", type=int,
                      help="true bit length for raw byte files without a sidecar")
    test.add_argument("--alpha", type=float, default=0.01)
    test.add_argument("--sequence-length", type=int,
                      help="split the input into sequences of this many bits")
    test.add_argument("--sequence-count", type=int)
    test.add_argument("--block-frequency-m", type=int, default=128)
    test.add_argument("--apen-m", type=int, default=10)
    test.add_argument("--serial-m", type=int, default=16)
    test.add_argument("--lc-m", type=int, default=500)
    test.add_argument("--from-manifest", help="reproduce a previous test run")
    test.set_defaults(func=_cmd_test)

    selftest = sub.add_parser("selftest", help="known-answer and oracle self-checks")
    selftest.set_defaults(func=_cmd_selftest)

    report = sub.add_parser("report", help="report utilities")
    report_sub = report.add_subparsers(dest="report_command")
    show = report_sub.add_parser("show", help="summarize a JSON report")
    show.add_argument("path")
    show.set_defaults(func=_cmd_report_show)

    return parser


def entry(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE
    if not hasattr(args, "func"):
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except StarvationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STARVATION
    except PufTrngError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(entry())


if __name__ == "__main__":
    main()
