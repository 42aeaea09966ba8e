"""Command line front end: run experiments, enumerate counts, predict, analyze.

Exit codes: 0 success, 2 bad config or pole violation, 3 enumeration budget
exceeded, 4 missing artifact.  ``PECQEC_OUTPUT_DIR`` and ``PECQEC_THREADS``
are the only environment knobs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import analytics as an
from .codes import CodeSpec, build_code
from .estimator import (
    DEFAULT_EXACT_BUDGET,
    combine_pec,
    estimate_naive_pec,
    estimate_naive_unmitigated,
    identity_mixture,
    identity_strata,
    superbranch_mixture,
    superbranch_strata,
)
from .noise import BIT_FLIP, NOISE_KINDS, NoiseSpec
from .pec import PoleError, build_inverse_channel, combination_factor, pole, sampling_overhead

CSV_COLUMNS = ("code", "d", "p", "noise", "mode", "estimator", "value", "std_err", "shots", "seed", "wall_time_ms")
RESULTS_SCHEMA_VERSION = 1
MODES = ("unmitigated", "pec", "both")
ESTIMATORS = ("stratified", "naive", "both")
CODE_KINDS = ("repetition", "surface")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_MISSING = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass
class ExperimentConfig:
    code: str = "repetition"
    distances: list[int] = field(default_factory=lambda: [3, 5])
    noise: str = BIT_FLIP
    p_grid: list[float] = field(default_factory=lambda: [0.01, 0.02, 0.05, 0.1])
    mode: str = "both"
    estimator: str = "stratified"
    k_max: int | None = None
    r_max: int | None = None
    shots_per_stratum: int = 100_000
    superbranch_shots: int | None = None
    naive_shots: int = 1_000_000
    exact_budget: int = DEFAULT_EXACT_BUDGET
    seed: int = 0
    output_dir: str = "results"
    name: str = "experiment"
    workers: int = 1
    record_wall_time: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def with_overrides(self, **overrides) -> ExperimentConfig:
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def includes_pec(self) -> bool:
        return self.mode in ("pec", "both")

    @property
    def modes(self) -> tuple[str, ...]:
        return ("unmitigated", "pec") if self.mode == "both" else (self.mode,)

    @property
    def estimators(self) -> tuple[str, ...]:
        return ("stratified", "naive") if self.estimator == "both" else (self.estimator,)

    def codes(self) -> list[CodeSpec]:
        return [build_code(self.code, d) for d in self.distances]

    def validate(self) -> ExperimentConfig:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}")
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"noise must be one of {NOISE_KINDS}")
        if not self.distances or not self.p_grid:
            raise ConfigError("distances and p_grid must be non-empty")
        if min(self.shots_per_stratum, self.naive_shots) < 1 or self.workers < 1:
            raise ConfigError("shot counts and workers must be positive")
        if any(not 0 <= p < 1 for p in self.p_grid):
            raise ConfigError("every p must lie in [0, 1)")
        try:
            codes = self.codes()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.includes_pec:
            for code in codes:
                bound = pole(code.n, code.omega)
                bad = [p for p in self.p_grid if p >= bound]
                if bad:
                    raise PoleError(f"{code.kind} d={code.d}: p={bad} not below pole {bound:.6g}")
        return self


@dataclass
class ResultRow:
    code: str
    d: int
    p: float
    noise: str
    mode: str
    estimator: str
    value: float
    std_err: float
    shots: int
    seed: int
    wall_time_ms: float = 0.0

    def as_csv(self) -> list[str]:
        return [
            self.code, str(self.d), repr(float(self.p)), self.noise, self.mode, self.estimator,
            repr(float(self.value)), repr(float(self.std_err)), str(self.shots), str(self.seed),
            f"{self.wall_time_ms:.3f}",
        ]

    @classmethod
    def from_csv(cls, rec: dict) -> ResultRow:
        return cls(rec["code"], int(rec["d"]), float(rec["p"]), rec["noise"], rec["mode"], rec["estimator"],
                   float(rec["value"]), float(rec["std_err"]), int(rec["shots"]), int(rec["seed"]),
                   float(rec["wall_time_ms"]))


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.as_csv())
    return buf.getvalue()


def read_rows(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [ResultRow.from_csv(rec) for rec in reader]


def write_results(rows: Sequence[ResultRow], config: ExperimentConfig, stem: Path, extra: dict | None = None):
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    csv_path.write_text(rows_to_csv(rows))
    mirror = {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "columns": list(CSV_COLUMNS),
        "config": config.to_dict(),
        "rows": [dataclasses.asdict(r) for r in rows],
    }
    if extra:
        mirror.update(extra)
    json_path.write_text(json.dumps(mirror, indent=2))
    return csv_path, json_path


# --------------------------------------------------------------------- run


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Every (d, p, mode, estimator) point of the grid, in that nesting order."""
    config.validate()
    rows: list[ResultRow] = []
    sb_shots = config.superbranch_shots or config.shots_per_stratum
    for code in config.codes():
        t0 = time.perf_counter()
        strata_i = strata_s = None
        if "stratified" in config.estimators:
            strata_i = identity_strata(code, config.noise, config.k_max, config.shots_per_stratum,
                                       config.seed, config.exact_budget, config.workers)
            if config.includes_pec:
                strata_s = superbranch_strata(code, config.noise, config.r_max, sb_shots,
                                              config.seed, config.exact_budget, config.workers)
        strata_ms = (time.perf_counter() - t0) * 1e3
        for p in config.p_grid:
            noise = NoiseSpec(config.noise, p, code.n)
            spec = build_inverse_channel(code, noise) if config.includes_pec else None
            for mode in config.modes:
                for est in config.estimators:
                    t1 = time.perf_counter()
                    if est == "stratified":
                        ident = identity_mixture(strata_i, code.n, p)
                        rec = ident
                        if mode == "pec":
                            sup = superbranch_mixture(strata_s, code.n, code.omega, p)
                            rec = combine_pec(ident, sup, combination_factor(spec))
                        elapsed = strata_ms + (time.perf_counter() - t1) * 1e3
                    else:
                        if mode == "pec":
                            rec = estimate_naive_pec(code, noise, spec, config.naive_shots, config.seed)
                        else:
                            rec = estimate_naive_unmitigated(code, noise, config.naive_shots, config.seed)
                        elapsed = (time.perf_counter() - t1) * 1e3
                    rows.append(ResultRow(
                        config.code if config.code in CODE_KINDS else code.kind, code.d, p, config.noise,
                        mode, est, rec.value, rec.std_err, rec.shots_total, config.seed,
                        elapsed if config.record_wall_time else 0.0,
                    ))
    return rows


def _group(rows: Sequence[ResultRow], keys: Sequence[str]) -> dict[tuple, list[ResultRow]]:
    out: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        out.setdefault(tuple(getattr(r, k) for k in keys), []).append(r)
    return out


def slope_table(rows: Sequence[ResultRow]) -> list[dict]:
    table = []
    for (code, noise, mode, est, d), grp in sorted(_group(rows, ("code", "noise", "mode", "estimator", "d")).items()):
        pts = [(r.p, abs(r.value)) for r in grp if r.p > 0 and r.value != 0]
        slope = an.fit_slope(pts).slope if len(pts) >= 2 else None
        table.append({"code": code, "noise": noise, "mode": mode, "estimator": est, "d": d,
                      "points": len(pts), "slope": slope})
    return table


def _print_slopes(table: list[dict], out=sys.stdout) -> None:
    print(f"{'code':<11}{'noise':<14}{'mode':<13}{'estimator':<12}{'d':>3}{'slope':>9}", file=out)
    for t in table:
        s = "n/a" if t["slope"] is None else f"{t['slope']:.3f}"
        print(f"{t['code']:<11}{t['noise']:<14}{t['mode']:<13}{t['estimator']:<12}{t['d']:>3}{s:>9}", file=out)


def output_stem(config: ExperimentConfig, suffix: str = "") -> Path:
    return Path(config.output_dir) / f"{config.name}{suffix}"


def cmd_run(config: ExperimentConfig, out=sys.stdout) -> tuple[Path, Path]:
    rows = run_experiment(config)
    paths = write_results(rows, config, output_stem(config))
    _print_slopes(slope_table(rows), out)
    print(f"wrote {paths[0]} and {paths[1]}", file=out)
    return paths


# --------------------------------------------------------------- enumerate


def counts_path(output_dir, code: CodeSpec) -> Path:
    return Path(output_dir) / f"counts_{code.kind}_d{code.d}.json"


def cmd_enumerate(
    code_kind: str,
    d: int,
    k_min: int,
    k_max: int,
    path=None,
    monte_carlo: int | None = None,
    budget: int = an.DEFAULT_ENUMERATION_BUDGET,
    seed: int = 0,
    workers: int = 1,
    output_dir: str = "results",
    out=sys.stdout,
) -> Path:
    """Add D_k for k_min..k_max to the counts artifact, falling back to sampling if allowed."""
    code = build_code(code_kind, d)
    if not 0 <= k_min <= k_max <= code.n:
        raise ConfigError(f"need 0 <= k_min <= k_max <= N={code.n}")
    path = Path(path) if path else counts_path(output_dir, code)
    if path.exists():
        counts = an.FailureCounts.load(path)
        counts.check_compatible(code)
    else:
        counts = an.FailureCounts.for_code(code)
    for k in range(k_min, k_max + 1):
        try:
            entry = an.count_failures(code, k, "exact", budget=budget, workers=workers)
        except an.BudgetExceeded:
            if not monte_carlo:
                raise
            entry = an.count_failures(code, k, "monte_carlo", shots=monte_carlo, seed=seed)
        counts.add(entry)
        ci = f" ci=({entry.ci[0]:.6g}, {entry.ci[1]:.6g})" if entry.ci else ""
        print(f"k={k}: D={entry.D} [{entry.provenance}]{ci}", file=out)
    path.parent.mkdir(parents=True, exist_ok=True)
    counts.save(path)
    return path


# ----------------------------------------------------------------- predict


def predict_rows(counts: an.FailureCounts, config: ExperimentConfig) -> tuple[list[ResultRow], dict]:
    """Theory curves for one code from D_k counts (plus a superbranch fit when needed).

    With counts for every weight and bit-flip noise both curves are exact.
    Otherwise the identity curve is the truncated weight series and the PEC
    curve uses least-squares s-coefficients fitted to sampled superbranch
    rates on the configured grid.
    """
    if not counts.entries:
        raise an.MissingCounts("counts artifact is empty")
    code = build_code(counts.code_kind, counts.d)
    counts.check_compatible(code)
    config = config.with_overrides(distances=[code.d]).validate()
    n, w = code.n, code.omega
    complete = all(k in counts for k in range(w, n + 1)) and config.noise == BIT_FLIP
    info: dict = {"exact": complete}
    if not complete:
        missing = [k for k in range(w, min(n, w + 3) + 1) if k not in counts]
        if missing:
            raise an.MissingCounts(f"series needs D_k for k in {missing}")
    fit = None
    if config.includes_pec and not complete:
        strata = superbranch_strata(code, config.noise, config.r_max,
                                    config.superbranch_shots or config.shots_per_stratum,
                                    config.seed, config.exact_budget, config.workers)
        samples = [(p, superbranch_mixture(strata, n, w, p).value) for p in config.p_grid]
        f0 = an.f0_from_counts(counts, config.noise)
        fit = an.surface_superbranch_fit(samples, f0, n)
        info.update(f0=f0, s=list(fit.coefficients), fit_residuals=fit.residuals)

    rows = []
    for p in config.p_grid:
        if complete:
            p_i = sum(counts[k] * p**k * (1 - p) ** (n - k) for k in range(w, n + 1))
        else:
            p_i = an.surface_identity_series(counts, n, p, config.noise)
        values = {"unmitigated": p_i}
        if config.includes_pec:
            if complete:
                values["pec"] = an.logical_rate_from_channel(counts, n, w, p)
            else:
                p_s = float(an.superbranch_series(info["f0"], fit.coefficients, n, p))
                values["pec"] = an.pec_combination(p_i, p_s, n, w, p)
        for mode in config.modes:
            rows.append(ResultRow(config.code if config.code in CODE_KINDS else code.kind, code.d, p,
                                  config.noise, mode, "theory", values[mode], 0.0, 0, config.seed))
    return rows, info


def cmd_predict(counts_file, config: ExperimentConfig, out=sys.stdout) -> tuple[Path, Path]:
    counts = an.FailureCounts.load(counts_file)
    rows, info = predict_rows(counts, config)
    stem = output_stem(config, f"_theory_d{counts.d}")
    paths = write_results(rows, config, stem, {"prediction": info, "counts_file": str(counts_file)})
    for r in rows:
        print(f"d={r.d} p={r.p:<8g} {r.mode:<12} {r.value: .6e}", file=out)
    print(f"wrote {paths[0]}", file=out)
    return paths


# ----------------------------------------------------------------- analyze


def analyze_rows(rows: Sequence[ResultRow]) -> dict:
    if not rows:
        raise InsufficientData("no result rows")
    slopes = slope_table(rows)
    if all(s["slope"] is None for s in slopes):
        raise InsufficientData("need at least two positive points per curve to fit a slope")
    thresholds = []
    for (code, noise, mode, est), grp in sorted(_group(rows, ("code", "noise", "mode", "estimator")).items()):
        per_d = {}
        for r in grp:
            if r.p > 0 and r.value != 0:
                per_d.setdefault(r.d, []).append((r.p, r.value))
        usable = {d: pts for d, pts in per_d.items() if len(pts) >= 2}
        entry = {"code": code, "noise": noise, "mode": mode, "estimator": est, "pair": None, "threshold": None}
        if len(usable) >= 2:
            pair = tuple(sorted(usable)[-2:])
            entry["pair"] = list(pair)
            try:
                res = an.estimate_threshold(usable, pair)
                entry["threshold"] = list(res.threshold) if res.threshold else None
                entry["degenerate"] = res.degenerate
            except an.ThresholdError as exc:
                entry["error"] = str(exc)
        thresholds.append(entry)
    points = []
    for r in rows:
        code = build_code(r.code, r.d)
        pt = {"code": r.code, "d": r.d, "p": r.p, "noise": r.noise, "mode": r.mode, "estimator": r.estimator,
              "value": r.value}
        if r.mode == "pec":
            spec = build_inverse_channel(code, NoiseSpec(r.noise, r.p, code.n))
            pt["overhead"] = sampling_overhead(spec)
            pt["negativity_predicted"] = an.negativity_condition(code.n, code.omega, r.p)
            pt["negative"] = r.value < 0
        points.append(pt)
    return {"slopes": slopes, "thresholds": thresholds, "points": points}


def cmd_analyze(results_file, report_path=None, out=sys.stdout) -> dict:
    report = analyze_rows(read_rows(results_file))
    _print_slopes(report["slopes"], out)
    for t in report["thresholds"]:
        if t["threshold"]:
            p_star, v_star = t["threshold"]
            print(f"threshold {t['code']} {t['noise']} {t['mode']} {t['estimator']} d={t['pair']}: "
                  f"p*={p_star:.4g} P*={v_star:.4g}", file=out)
    report_path = Path(report_path) if report_path else Path(results_file).with_suffix(".report.json")
    report_path.write_text(json.dumps(report, indent=2))
    print(f"wrote {report_path}", file=out)
    return report


# -------------------------------------------------------------------- main


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _add_config_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON config file; flags override its fields")
    sp.add_argument("--code", choices=("repetition", "surface", "rep"))
    sp.add_argument("--distances", type=_int_list, help="comma separated, e.g. 3,5,7")
    sp.add_argument("--noise", choices=NOISE_KINDS)
    sp.add_argument("--p-grid", dest="p_grid", type=_float_list, help="comma separated error rates")
    sp.add_argument("--mode", choices=MODES)
    sp.add_argument("--estimator", choices=ESTIMATORS)
    sp.add_argument("--k-max", dest="k_max", type=int)
    sp.add_argument("--r-max", dest="r_max", type=int)
    sp.add_argument("--shots", dest="shots_per_stratum", type=int)
    sp.add_argument("--superbranch-shots", dest="superbranch_shots", type=int)
    sp.add_argument("--naive-shots", dest="naive_shots", type=int)
    sp.add_argument("--exact-budget", dest="exact_budget", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--output-dir", dest="output_dir")
    sp.add_argument("--name")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--record-wall-time", dest="record_wall_time", action="store_const", const=True)


_CONFIG_FLAGS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    env = {}
    if os.environ.get("PECQEC_OUTPUT_DIR"):
        env["output_dir"] = os.environ["PECQEC_OUTPUT_DIR"]
    if os.environ.get("PECQEC_THREADS"):
        env["workers"] = int(os.environ["PECQEC_THREADS"])
    flags = {k: getattr(args, k, None) for k in _CONFIG_FLAGS}
    return base.with_overrides(**env).with_overrides(**flags)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pecqec", description="PEC on top of code-capacity QEC memory experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate the configured grid")
    _add_config_flags(run)

    en = sub.add_parser("enumerate", help="count failing weight-k X patterns")
    en.add_argument("--code", required=True, choices=("repetition", "surface", "rep"))
    en.add_argument("--d", type=int, required=True)
    en.add_argument("--k", type=int, required=True, help="first weight")
    en.add_argument("--k-max", dest="k_max", type=int, help="last weight (default: --k)")
    en.add_argument("--monte-carlo", dest="monte_carlo", type=int, metavar="SHOTS",
                    help="sample weights whose enumeration exceeds the budget")
    en.add_argument("--budget", type=int, default=an.DEFAULT_ENUMERATION_BUDGET)
    en.add_argument("--seed", type=int, default=0)
    en.add_argument("--out")

    pr = sub.add_parser("predict", help="theory curves from a counts artifact")
    pr.add_argument("--counts", required=True)
    _add_config_flags(pr)

    az = sub.add_parser("analyze", help="slopes, thresholds and overheads of a results CSV")
    az.add_argument("results")
    az.add_argument("--out")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cmd_run(config_from_args(args))
        elif args.command == "enumerate":
            cmd_enumerate(args.code, args.d, args.k, args.k_max if args.k_max is not None else args.k,
                          args.out, args.monte_carlo, args.budget, args.seed,
                          int(os.environ.get("PECQEC_THREADS", "1")),
                          os.environ.get("PECQEC_OUTPUT_DIR", "results"))
        elif args.command == "predict":
            if not Path(args.counts).exists():
                raise FileNotFoundError(args.counts)
            cmd_predict(args.counts, config_from_args(args))
        elif args.command == "analyze":
            cmd_analyze(args.results, args.out)
    except (ConfigError, PoleError, InsufficientData) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except an.BudgetExceeded as exc:
        print(f"error: {exc}; pass --monte-carlo SHOTS to sample instead", file=sys.stderr)
        return EXIT_BUDGET
    except (FileNotFoundError, an.MissingCounts) as exc:
        print(f"error: missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
