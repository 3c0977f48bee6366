#!/usr/bin/env python3
"""Generate streams from the default device and run the full validation.

This is the desk-top analogue of a TRNG qualification run: many streams
through the NIST battery with the pass-proportion bound, plus the
byte-level metrics on one long stream.  Defaults mirror the acceptance
setup (100 x 10^6 bits); trim --streams / --bits for a quick look.
"""

import argparse
import sys
import time

from puf_trng import (
    BatteryConfig,
    GeneratorConfig,
    PufParameters,
    ent_metrics,
    ent_verdict,
    generate,
    run_battery,
    sample_puf,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--streams", type=int, default=100)
    ap.add_argument("--bits", type=int, default=1_000_000, help="bits per stream")
    ap.add_argument("--ent-bits", type=int, default=10_000_000)
    ap.add_argument("--instance-seed", type=int, default=None,
                    help="override the calibrated default instance")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    params = (
        PufParameters() if args.instance_seed is None
        else PufParameters(instance_seed=args.instance_seed)
    )
    instance = sample_puf(params)

    t0 = time.time()
    streams = []
    for seed in range(args.streams):
        config = GeneratorConfig(puf_params=params, noise_seed=seed)
        streams.append(generate(config, args.bits, instance=instance).bits())
    print(f"[{time.time()-t0:6.1f}s] generated {args.streams} x {args.bits} bits")

    report = run_battery(streams, BatteryConfig(), max_workers=args.workers)
    print(f"[{time.time()-t0:6.1f}s] battery complete")
    for line in report.proportions:
        flag = "pass" if line.verdict else "FAIL"
        print(f"  {line.test_name:28s} {line.passed:4d}/{line.total:<4d} "
              f"(bound {line.lower_bound:.4f})  {flag}")

    ent_config = GeneratorConfig(puf_params=params, noise_seed=args.streams + 900)
    ent_report = ent_metrics(generate(ent_config, args.ent_bits, instance=instance).data)
    ent_ok, issues = ent_verdict(ent_report)
    print(f"[{time.time()-t0:6.1f}s] ent over {args.ent_bits} bits: "
          f"entropy {ent_report.entropy_bits_per_byte:.6f} b/B, "
          f"mean {ent_report.mean:.4f}, pi {ent_report.monte_carlo_pi:.6f}, "
          f"scc {ent_report.serial_correlation:.6f}, "
          f"chi exceed {ent_report.chi_square_exceed_pct:.2f}%")
    for issue in issues:
        print(f"  issue: {issue}")

    ok = report.verdict and ent_ok
    print(f"overall: {'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
