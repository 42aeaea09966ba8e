"""Repetition code under bit-flip noise: simulate, overlay closed forms, fit slopes and thresholds."""

import argparse
from pathlib import Path

from pecqec import analytics as an
from pecqec.cli import ExperimentConfig, analyze_rows, run_experiment, write_results


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(Path(__file__).parents[1] / "configs" / "repetition_bitflip.json"))
    ap.add_argument("--output-dir")
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config).with_overrides(output_dir=args.output_dir)
    rows = run_experiment(cfg)
    write_results(rows, cfg, Path(cfg.output_dir) / cfg.name)

    worst = 0.0
    for r in rows:
        ref = an.repetition_identity_rate(r.d, r.p)
        if r.mode == "pec":
            ref = an.pec_combination(ref, an.repetition_superbranch_rate(r.d, r.p), r.d, (r.d + 1) // 2, r.p)
        worst = max(worst, abs(r.value - ref))
    print(f"max |simulation - closed form| = {worst:.3e}")

    report = analyze_rows(rows)
    for s in report["slopes"]:
        print(f"{s['mode']:<12} d={s['d']}  slope {s['slope']:.3f}")
    for t in report["thresholds"]:
        print(f"{t['mode']:<12} threshold from d={t['pair']}: p* = {t['threshold'][0]:.4f}")


if __name__ == "__main__":
    main()
