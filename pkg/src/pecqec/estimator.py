"""Memory-experiment shots and the stratified / naive PEC estimators.

Stratum failure rates do not depend on p (only the mixture weights do), so
strata are sampled once per (code, noise kind) and re-weighted for every p
on a grid.  Strata whose whole pattern space is no larger than
``exact_budget`` are enumerated instead of sampled and carry zero variance.
"""

from __future__ import annotations

import functools
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .codes import CodeSpec, PauliString, is_logical_failure, x_syndrome
from .decoder import BatchDecoder, DecodingGraph, build_decoding_graph, decode
from .noise import (
    BIT_FLIP,
    NoiseSpec,
    keyed_rng,
    letters_to_xz,
    random_letters,
    random_orders,
    sample_error,
    sample_errors,
    scatter,
    stable_key,
)
from .pec import InverseChannelSpec, build_inverse_channel, combination_factor

DEFAULT_IDENTITY_SHOTS = 800_000
DEFAULT_SUPERBRANCH_SHOTS = 320_000
DEFAULT_EXACT_BUDGET = 100_000
BLOCK = 1 << 15

_TAG_IDENTITY, _TAG_SUPER, _TAG_NAIVE, _TAG_PLAIN = 0, 1, 2, 3


@dataclass(frozen=True)
class StratumCount:
    shots: int
    failures: int
    exact: bool = False

    @property
    def rate(self) -> float:
        return self.failures / self.shots if self.shots else 0.0

    def merge(self, other: StratumCount) -> StratumCount:
        if self.exact or other.exact:
            raise ValueError("exact strata are not merged with sampled ones")
        return StratumCount(self.shots + other.shots, self.failures + other.failures)


@dataclass(frozen=True)
class StratumRecord:
    key: tuple
    weight: float
    shots: int
    failures: int
    exact: bool = False

    def __post_init__(self):
        if not 0 <= self.failures <= max(self.shots, 0):
            raise ValueError("need 0 <= failures <= shots")

    @property
    def rate(self) -> float:
        return self.failures / self.shots if self.shots else 0.0

    @property
    def variance(self) -> float:
        if self.exact or self.shots == 0:
            return 0.0
        q = self.rate
        return self.weight**2 * q * (1.0 - q) / self.shots


@dataclass
class EstimateRecord:
    value: float
    variance: float
    shots_total: int
    components: dict = field(default_factory=dict)
    strata: list = field(default_factory=list)

    @property
    def std_err(self) -> float:
        return math.sqrt(max(self.variance, 0.0))

    def ci(self, z: float = 1.96) -> tuple[float, float]:
        half = z * self.std_err
        return self.value - half, self.value + half


@functools.lru_cache(maxsize=32)
def graph_for(code: CodeSpec) -> DecodingGraph:
    return build_decoding_graph(code)


@functools.lru_cache(maxsize=32)
def batch_decoder_for(code: CodeSpec) -> BatchDecoder:
    return BatchDecoder(graph_for(code))


def experiment_id(code: CodeSpec, noise_kind: str) -> int:
    return stable_key(code.kind, code.d, noise_kind)


# ---------------------------------------------------------------- single shot


def run_shot(code: CodeSpec, noise: NoiseSpec, branch, rng, graph: DecodingGraph | None = None) -> int:
    """One shot: noise, then the branch insertion, then syndrome/decode/correct."""
    sign, inserted = branch
    graph = graph or graph_for(code)
    error = sample_error(noise, rng)
    total = error.compose(inserted)
    corr = decode(graph, x_syndrome(code, total))
    residual = total.compose(corr.pauli)
    # Z components are never corrected; only the X part reaches the logical
    residual = PauliString(code.n, residual.x_mask, 0)
    return int(is_logical_failure(code, residual))


# ------------------------------------------------------------- stratum counts


def _pattern_x_choices(category: str, noise_kind: str) -> dict[int, int]:
    """Multiplicity of each composite X bit at one site of the given category."""
    if noise_kind == BIT_FLIP:
        return {"noise": {1: 1}, "insert": {1: 1}, "overlap": {0: 1}}[category]
    return {"noise": {1: 2, 0: 1}, "insert": {1: 2, 0: 1}, "overlap": {1: 4, 0: 5}}[category]


def identity_pattern_count(n: int, k: int, noise_kind: str) -> int:
    letters = 1 if noise_kind == BIT_FLIP else 3
    return math.comb(n, k) * letters**k


def superbranch_pattern_count(n: int, omega: int, u: int, r: int, noise_kind: str) -> int:
    letters = 1 if noise_kind == BIT_FLIP else 3
    return (
        math.comb(n, omega) * math.comb(omega, u) * math.comb(n - omega, r) * letters ** (omega + u + r)
    )


def _exact_count(code: CodeSpec, noise_kind: str, configs, categories) -> StratumCount:
    """Enumerate every pattern of a stratum and count weighted failures.

    ``configs`` yields position tuples; column j of each tuple is a site of
    kind ``categories[j]``.
    """
    decoder = batch_decoder_for(code)
    options = [_pattern_x_choices(c, noise_kind) for c in categories]
    choices = list(itertools.product(*[sorted(o) for o in options]))
    bits = np.array(choices, dtype=np.uint8).reshape(len(choices), len(categories))
    mult = np.array(
        [math.prod(options[j][b] for j, b in enumerate(ch)) for ch in choices], dtype=np.int64
    )
    total = fails = 0
    it = iter(configs)
    while True:
        block = list(itertools.islice(it, max(1, BLOCK // len(choices))))
        if not block:
            break
        pos = np.array(block, dtype=np.intp).reshape(len(block), len(categories))
        rows = len(block) * len(choices)
        x = np.zeros((rows, code.n), dtype=np.uint8)
        r_idx = np.arange(rows)[:, None]
        x[r_idx, np.repeat(pos, len(choices), axis=0)] = np.tile(bits, (len(block), 1))
        f = decoder.failures(x).astype(np.int64)
        w = np.tile(mult, len(block))
        fails += int(f @ w)
        total += int(w.sum())
    return StratumCount(total, fails, exact=True)


def _superbranch_configs(n: int, omega: int, u: int, r: int):
    for s in itertools.combinations(range(n), omega):
        rest = [q for q in range(n) if q not in s]
        for ov in itertools.combinations(s, u):
            only = tuple(q for q in s if q not in ov)
            for ex in itertools.combinations(rest, r):
                yield only + ov + ex


def _identity_block(code, noise_kind, k, shots, rng) -> int:
    orders = random_orders(shots, code.n, rng)
    letters = scatter(orders, 0, k, random_letters(noise_kind, (shots, k), rng), code.n)
    x, _ = letters_to_xz(letters)
    return int(batch_decoder_for(code).failures(x).sum())


def _superbranch_block(code, noise_kind, u, r, shots, rng) -> int:
    n, omega = code.n, code.omega
    orders = random_orders(shots, n, rng)
    insert = scatter(orders, 0, omega, random_letters(noise_kind, (shots, omega), rng), n)
    noise = scatter(orders, 0, u, random_letters(noise_kind, (shots, u), rng), n)
    noise += scatter(orders, omega, omega + r, random_letters(noise_kind, (shots, r), rng), n)
    x = letters_to_xz(insert)[0] ^ letters_to_xz(noise)[0]
    return int(batch_decoder_for(code).failures(x).sum())


def stratum_count(
    code: CodeSpec,
    noise_kind: str,
    key: tuple,
    shots: int,
    seed: int,
    exact_budget: int = DEFAULT_EXACT_BUDGET,
) -> StratumCount:
    """Failure count for one stratum: ``("identity", k)`` or ``("superbranch", u, r)``."""
    n, omega = code.n, code.omega
    exp = experiment_id(code, noise_kind)
    if key[0] == "identity":
        (k,) = key[1:]
        if k < omega:
            # below the distance every pattern is corrected
            return StratumCount(0, 0, exact=True)
        if identity_pattern_count(n, k, noise_kind) <= exact_budget:
            return _exact_count(
                code, noise_kind, itertools.combinations(range(n), k), ["noise"] * k
            )
        tag, a, b = _TAG_IDENTITY, k, 0
        block_fn = functools.partial(_identity_block, code, noise_kind, k)
    elif key[0] == "superbranch":
        u, r = key[1:]
        if superbranch_pattern_count(n, omega, u, r, noise_kind) <= exact_budget:
            cats = ["insert"] * (omega - u) + ["overlap"] * u + ["noise"] * r
            return _exact_count(code, noise_kind, _superbranch_configs(n, omega, u, r), cats)
        tag, a, b = _TAG_SUPER, u, r
        block_fn = functools.partial(_superbranch_block, code, noise_kind, u, r)
    else:
        raise ValueError(f"unknown stratum key {key!r}")

    failures = 0
    for block, start in enumerate(range(0, shots, BLOCK)):
        size = min(BLOCK, shots - start)
        failures += block_fn(size, keyed_rng(seed, exp, tag, a, b, block))
    return StratumCount(shots, failures)


def _stratum_task(args):
    code, noise_kind, key, shots, seed, budget = args
    return key, stratum_count(code, noise_kind, key, shots, seed, budget)


def _run_tasks(tasks, workers: int) -> dict:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return dict(pool.map(_stratum_task, tasks))
    return dict(map(_stratum_task, tasks))


def default_k_max(code: CodeSpec, noise_kind: str, exact_budget: int = DEFAULT_EXACT_BUDGET) -> int:
    """Every weight when all strata can be enumerated, else omega + 2 (bit flip) or + 3."""
    if all(identity_pattern_count(code.n, k, noise_kind) <= exact_budget for k in range(code.n + 1)):
        return code.n
    extra = 2 if noise_kind == BIT_FLIP else 3
    return min(code.n, code.omega + extra)


def default_r_max(code: CodeSpec, noise_kind: str = BIT_FLIP, exact_budget: int = DEFAULT_EXACT_BUDGET) -> int:
    n, w = code.n, code.omega
    if all(
        superbranch_pattern_count(n, w, u, r, noise_kind) <= exact_budget
        for u in range(w + 1)
        for r in range(n - w + 1)
    ):
        return n - w
    return min(3, n - w)


def identity_strata(
    code: CodeSpec,
    noise_kind: str,
    k_max: int | None = None,
    shots_per_stratum: int = DEFAULT_IDENTITY_SHOTS,
    seed: int = 0,
    exact_budget: int = DEFAULT_EXACT_BUDGET,
    workers: int = 1,
) -> dict[int, StratumCount]:
    k_max = default_k_max(code, noise_kind, exact_budget) if k_max is None else k_max
    if k_max > code.n:
        raise ValueError(f"k_max={k_max} exceeds N={code.n}")
    if k_max < code.omega:
        raise ValueError(f"k_max={k_max} below omega={code.omega}")
    tasks = [
        (code, noise_kind, ("identity", k), shots_per_stratum, seed, exact_budget)
        for k in range(k_max + 1)
    ]
    return {key[1]: c for key, c in _run_tasks(tasks, workers).items()}


def superbranch_strata(
    code: CodeSpec,
    noise_kind: str,
    r_max: int | None = None,
    shots_per_stratum: int = DEFAULT_SUPERBRANCH_SHOTS,
    seed: int = 0,
    exact_budget: int = DEFAULT_EXACT_BUDGET,
    workers: int = 1,
) -> dict[tuple[int, int], StratumCount]:
    r_max = default_r_max(code, noise_kind, exact_budget) if r_max is None else r_max
    if not 0 <= r_max <= code.n - code.omega:
        raise ValueError(f"r_max={r_max} outside [0, N - omega]")
    tasks = [
        (code, noise_kind, ("superbranch", u, r), shots_per_stratum, seed, exact_budget)
        for u in range(code.omega + 1)
        for r in range(r_max + 1)
    ]
    return {key[1:]: c for key, c in _run_tasks(tasks, workers).items()}


# -------------------------------------------------------------- mixtures


def identity_weight(n: int, k: int, p: float) -> float:
    return math.comb(n, k) * p**k * (1.0 - p) ** (n - k)


def superbranch_weight(n: int, omega: int, u: int, r: int, p: float) -> float:
    """Probability that noise hits u inserted sites and r other sites."""
    overlap = math.comb(omega, u) * p**u * (1.0 - p) ** (omega - u)
    extra = math.comb(n - omega, r) * p**r * (1.0 - p) ** (n - omega - r)
    return overlap * extra


def _mixture(records: list[StratumRecord], covered: float) -> EstimateRecord:
    value = sum(r.weight * r.rate for r in records)
    variance = sum(r.variance for r in records)
    shots = sum(r.shots for r in records if not r.exact)
    return EstimateRecord(
        value, variance, shots, {"covered_weight": covered, "truncated_weight": 1.0 - covered}, records
    )


def identity_mixture(strata: dict[int, StratumCount], n: int, p: float) -> EstimateRecord:
    records = [
        StratumRecord(("identity", k), identity_weight(n, k, p), c.shots, c.failures, c.exact)
        for k, c in sorted(strata.items())
    ]
    return _mixture(records, sum(r.weight for r in records))


def superbranch_mixture(
    strata: dict[tuple[int, int], StratumCount], n: int, omega: int, p: float
) -> EstimateRecord:
    records = [
        StratumRecord(("superbranch", u, r), superbranch_weight(n, omega, u, r, p), c.shots, c.failures, c.exact)
        for (u, r), c in sorted(strata.items())
    ]
    return _mixture(records, sum(r.weight for r in records))


def estimate_identity_stratified(
    code: CodeSpec,
    noise: NoiseSpec,
    k_max: int | None = None,
    shots_per_stratum: int = DEFAULT_IDENTITY_SHOTS,
    seed: int = 0,
    exact_budget: int = DEFAULT_EXACT_BUDGET,
) -> EstimateRecord:
    strata = identity_strata(code, noise.kind, k_max, shots_per_stratum, seed, exact_budget)
    return identity_mixture(strata, code.n, noise.p)


def estimate_superbranch_stratified(
    code: CodeSpec,
    noise: NoiseSpec,
    spec: InverseChannelSpec | None = None,
    r_max: int | None = None,
    shots_per_stratum: int = DEFAULT_SUPERBRANCH_SHOTS,
    seed: int = 0,
    exact_budget: int = DEFAULT_EXACT_BUDGET,
) -> EstimateRecord:
    if spec is not None and (spec.n != code.n or spec.omega != code.omega):
        raise ValueError("inverse channel does not match the code")
    strata = superbranch_strata(code, noise.kind, r_max, shots_per_stratum, seed, exact_budget)
    return superbranch_mixture(strata, code.n, code.omega, noise.p)


def combine_pec(identity: EstimateRecord, superbranch: EstimateRecord, G: float) -> EstimateRecord:
    """(1 + G) P_I - G P_S; the two inputs come from disjoint shots, so no covariance."""
    value = (1.0 + G) * identity.value - G * superbranch.value
    variance = (1.0 + G) ** 2 * identity.variance + G**2 * superbranch.variance
    return EstimateRecord(
        value,
        variance,
        identity.shots_total + superbranch.shots_total,
        {"P_I": identity.value, "P_S": superbranch.value, "G": G},
    )


# ------------------------------------------------------------ naive sampling


def _signed_samples(code, noise, spec, shots, rng):
    n, omega = code.n, code.omega
    x, _ = sample_errors(noise, shots, rng)
    sup = rng.random(shots) < spec.superbranch_probability
    m = int(sup.sum())
    if m:
        orders = random_orders(m, n, rng)
        insert = scatter(orders, 0, omega, random_letters(noise.kind, (m, omega), rng), n)
        x[sup] ^= letters_to_xz(insert)[0]
    f = batch_decoder_for(code).failures(x).astype(np.float64)
    sign = np.where(sup, -1.0, 1.0)
    return f, sign * spec.l1_norm * f


def naive_pec_samples(code: CodeSpec, noise: NoiseSpec, spec: InverseChannelSpec, shots: int, seed: int = 0):
    """Per-shot raw failures and signed PEC samples sign(beta_b) * ||beta||_1 * f."""
    exp = experiment_id(code, noise.kind)
    pkey = stable_key(repr(float(noise.p)))
    raw, signed = [], []
    for block, start in enumerate(range(0, shots, BLOCK)):
        size = min(BLOCK, shots - start)
        f, s = _signed_samples(code, noise, spec, size, keyed_rng(seed, exp, _TAG_NAIVE, pkey, block))
        raw.append(f)
        signed.append(s)
    return np.concatenate(raw), np.concatenate(signed)


def estimate_naive_pec(
    code: CodeSpec, noise: NoiseSpec, spec: InverseChannelSpec | None = None, shots: int = 1_000_000, seed: int = 0
) -> EstimateRecord:
    spec = spec or build_inverse_channel(code, noise)
    raw, samples = naive_pec_samples(code, noise, spec, shots, seed)
    var = float(samples.var(ddof=1)) / shots if shots > 1 else 0.0
    return EstimateRecord(
        float(samples.mean()),
        var,
        shots,
        {"raw_failure_rate": float(raw.mean()), "raw_variance": float(raw.var(ddof=1)) if shots > 1 else 0.0,
         "l1_norm": spec.l1_norm},
    )


def estimate_naive_unmitigated(code: CodeSpec, noise: NoiseSpec, shots: int = 1_000_000, seed: int = 0) -> EstimateRecord:
    """Plain Monte Carlo of the identity branch."""
    exp = experiment_id(code, noise.kind)
    pkey = stable_key(repr(float(noise.p)))
    fails = 0
    for block, start in enumerate(range(0, shots, BLOCK)):
        size = min(BLOCK, shots - start)
        x, _ = sample_errors(noise, size, keyed_rng(seed, exp, _TAG_PLAIN, pkey, block))
        fails += int(batch_decoder_for(code).failures(x).sum())
    q = fails / shots
    return EstimateRecord(q, q * (1 - q) / shots, shots)
