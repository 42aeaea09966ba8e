"""Rotated surface code under depolarizing noise, with a theory overlay for each distance."""

import argparse
from pathlib import Path

from pecqec import analytics as an
from pecqec.cli import ExperimentConfig, analyze_rows, predict_rows, run_experiment, write_results
from pecqec.codes import build_code


def counts_for(d: int, extra: int, mc_shots: int) -> an.FailureCounts:
    code = build_code("surface", d)
    counts = an.FailureCounts.for_code(code)
    for k in range(code.omega, code.omega + extra + 1):
        try:
            counts.add(an.count_failures(code, k))
        except an.BudgetExceeded:
            counts.add(an.count_failures(code, k, "monte_carlo", shots=mc_shots))
    return counts


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(Path(__file__).parents[1] / "configs" / "surface_depolarizing.json"))
    ap.add_argument("--output-dir")
    ap.add_argument("--mc-shots", type=int, default=1_000_000)
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config).with_overrides(output_dir=args.output_dir)
    rows = run_experiment(cfg)
    write_results(rows, cfg, Path(cfg.output_dir) / cfg.name)

    for d in cfg.distances:
        counts = counts_for(d, 3, args.mc_shots)
        theory, info = predict_rows(counts, cfg)
        write_results(theory, cfg, Path(cfg.output_dir) / f"{cfg.name}_theory_d{d}", {"prediction": info})
        s = ", ".join(f"{c:.4g}" for c in info.get("s", []))
        print(f"d={d}: f0 = {info.get('f0', float('nan')):.4g}  s = ({s})")

    report = analyze_rows(rows)
    for s in report["slopes"]:
        print(f"{s['mode']:<12} d={s['d']}  slope {s['slope']:.3f}")
    for t in report["thresholds"]:
        if t["threshold"]:
            print(f"{t['mode']:<12} threshold from d={t['pair']}: p* = {t['threshold'][0]:.4f}")


if __name__ == "__main__":
    main()
