"""Exact and semi-analytic predictions for PEC-mitigated memory experiments.

Everything that must hold *exactly* (trace preservation, the vanishing of
the p^omega term) is computed with :class:`SeriesPoly`; floats are used only
when a curve is evaluated at a numeric p.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .codes import CodeSpec
from .decoder import DECODER_VERSION
from .estimator import batch_decoder_for
from .noise import BIT_FLIP, DEPOLARIZING, keyed_rng, stable_key
from .series import SeriesPoly, binomial_sum

SCHEMA_VERSION = 1
DEFAULT_ENUMERATION_BUDGET = 10**8
MAX_EXACT_QUBITS = 20


class BudgetExceeded(RuntimeError):
    pass


class MissingCounts(KeyError):
    pass


class CancellationError(ArithmeticError):
    pass


class ThresholdError(ValueError):
    pass


# ------------------------------------------------------------ failure counts


@dataclass
class CountEntry:
    k: int
    D: float
    provenance: str  # "exact_enumeration" or "monte_carlo"
    shots: int | None = None
    ci: tuple[float, float] | None = None


@dataclass
class FailureCounts:
    """Per-weight counts D_k of X-only patterns that the decoder fails on."""

    code_kind: str
    d: int
    n: int
    omega: int
    layout_hash: str
    decoder_version: str = DECODER_VERSION
    entries: dict[int, CountEntry] = field(default_factory=dict)

    @classmethod
    def for_code(cls, code: CodeSpec) -> FailureCounts:
        return cls(code.kind, code.d, code.n, code.omega, code.layout_hash)

    def __getitem__(self, k: int) -> float:
        if k < self.omega and k not in self.entries:
            return 0
        try:
            return self.entries[k].D
        except KeyError:
            raise MissingCounts(f"no D_{k} for {self.code_kind} d={self.d}") from None

    def __contains__(self, k: int) -> bool:
        return k < self.omega or k in self.entries

    def add(self, entry: CountEntry) -> None:
        self.entries[entry.k] = entry

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "code": {"kind": self.code_kind, "d": self.d, "n": self.n, "omega": self.omega,
                     "layout_hash": self.layout_hash},
            "decoder_version": self.decoder_version,
            "noise": "x_only",
            "counts": [
                {key: val for key, val in asdict(e).items() if val is not None}
                for _, e in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> FailureCounts:
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {data.get('schema_version')!r}")
        c = data["code"]
        out = cls(c["kind"], c["d"], c["n"], c["omega"], c["layout_hash"], data["decoder_version"])
        for e in data["counts"]:
            ci = tuple(e["ci"]) if e.get("ci") is not None else None
            out.add(CountEntry(e["k"], e["D"], e["provenance"], e.get("shots"), ci))
        return out

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)

    @classmethod
    def load(cls, path) -> FailureCounts:
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def check_compatible(self, code: CodeSpec) -> None:
        if (self.code_kind, self.d, self.layout_hash) != (code.kind, code.d, code.layout_hash):
            raise ValueError("counts were produced for a different code layout")
        if self.decoder_version != DECODER_VERSION:
            raise ValueError(f"counts were produced by decoder {self.decoder_version}")


def _count_with_first(code: CodeSpec, k: int, first: int) -> int:
    """Failing weight-k X patterns whose lowest qubit is ``first``."""
    dec = batch_decoder_for(code)
    n = code.n
    it = itertools.combinations(range(first + 1, n), k - 1)
    fails = 0
    while True:
        block = list(itertools.islice(it, 1 << 15))
        if not block:
            return fails
        rows = len(block)
        x = np.zeros((rows, n), dtype=np.uint8)
        x[:, first] = 1
        if k > 1:
            idx = np.array(block, dtype=np.intp)
            x[np.arange(rows)[:, None], idx] = 1
        fails += int(dec.failures(x).sum())


def _count_task(args):
    return _count_with_first(*args)


def count_failures(
    code: CodeSpec,
    k: int,
    mode: str = "exact",
    shots: int | None = None,
    seed: int = 0,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
    workers: int = 1,
) -> CountEntry:
    """D_k by full enumeration, or D_k-hat = C(N, k) * failure fraction by sampling."""
    n = code.n
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range for n={n}")
    total = math.comb(n, k)
    if mode == "exact":
        if total > budget:
            raise BudgetExceeded(f"C({n},{k}) = {total} patterns exceeds budget {budget}")
        if k == 0:
            fails = int(batch_decoder_for(code).failures(np.zeros((1, n), dtype=np.uint8))[0])
            return CountEntry(k, fails, "exact_enumeration")
        tasks = [(code, k, first) for first in range(n - k + 1)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                fails = sum(pool.map(_count_task, tasks))
        else:
            fails = sum(map(_count_task, tasks))
        return CountEntry(k, fails, "exact_enumeration")
    if mode == "monte_carlo":
        if not shots:
            raise ValueError("monte_carlo mode needs a positive shot count")
        from .estimator import BLOCK, _identity_block

        fails = 0
        for block, start in enumerate(range(0, shots, BLOCK)):
            size = min(BLOCK, shots - start)
            rng = keyed_rng(seed, stable_key(code.kind, code.d, "counts"), k, block)
            fails += _identity_block(code, BIT_FLIP, k, size, rng)
        q = fails / shots
        half = 1.96 * total * math.sqrt(q * (1 - q) / shots)
        return CountEntry(k, total * q, "monte_carlo", shots, (total * q - half, total * q + half))
    raise ValueError(f"unknown mode {mode!r}")


def depolarizing_failure_counts(x_counts, n: int, k: int) -> int:
    """Failing Pauli strings of weight k: sum_t 2^t D_t^(X) C(N - t, k - t).

    Y behaves as X and Z as I for the logical-Z memory, so every failing
    X-support of weight t extends to 2^t letterings times C(N-t, k-t)
    placements of Z's.
    """
    omega = x_counts.omega if isinstance(x_counts, FailureCounts) else min(x_counts)
    total = 0
    for t in range(omega, k + 1):
        if t not in x_counts:
            raise MissingCounts(f"need D_{t}^(X) for the depolarizing mapping")
        total += 2**t * x_counts[t] * math.comb(n - t, k - t)
    return total


def f0_from_counts(x_counts: FailureCounts, noise_kind: str = BIT_FLIP) -> float:
    n, w = x_counts.n, x_counts.omega
    if noise_kind == BIT_FLIP:
        return x_counts[w] / math.comb(n, w)
    return depolarizing_failure_counts(x_counts, n, w) / (math.comb(n, w) * 3**w)


# ---------------------------------------------------------- composite channel


def _weight_poly(n: int, k: int) -> SeriesPoly:
    return SeriesPoly.binomial_term(k, n)


def normalisation_poly(n: int, omega: int) -> SeriesPoly:
    return _weight_poly(n, 0) - math.comb(n, omega) * _weight_poly(n, omega)


def _t_range(n: int, omega: int, k: int):
    return range(max(0, omega + k - n), min(omega, k) + 1)


def composite_numerator(n: int, omega: int, k: int) -> SeriesPoly:
    """A * c_k(p) as an exact polynomial."""
    if not 0 <= k <= n or not 1 <= omega <= n:
        raise ValueError(f"invalid indices n={n}, omega={omega}, k={k}")
    inner = SeriesPoly()
    for t in _t_range(n, omega, k):
        inner = inner + math.comb(k, t) * math.comb(n - k, omega - t) * _weight_poly(n, omega + k - 2 * t)
    return _weight_poly(n, 0) * _weight_poly(n, k) - _weight_poly(n, omega) * inner


def composite_coefficient_series(n: int, omega: int, k: int, order: int | None = None) -> SeriesPoly:
    """Taylor series of c_k(p) about p = 0, up to p^order (default 2N)."""
    order = 2 * n if order is None else order
    return composite_numerator(n, omega, k).series_div(normalisation_poly(n, omega), order)


def composite_coefficient(n: int, omega: int, k: int, p: float) -> float:
    """c_k(p) = [P0 P_k - P_w sum_t C(k,t) C(N-k, w-t) P_{w+k-2t}] / A."""
    if not 0 <= k <= n or not 1 <= omega <= n:
        raise ValueError(f"invalid indices n={n}, omega={omega}, k={k}")

    def pk(j):
        return p**j * (1.0 - p) ** (n - j)

    a = pk(0) - math.comb(n, omega) * pk(omega)
    inner = sum(math.comb(k, t) * math.comb(n - k, omega - t) * pk(omega + k - 2 * t) for t in _t_range(n, omega, k))
    return (pk(0) * pk(k) - pk(omega) * inner) / a


def logical_rate_from_channel(counts, n: int, omega: int, p: float) -> float:
    """sum_{k >= omega} c_k(p) D_k; needs D_k for every k up to N."""
    missing = [k for k in range(omega, n + 1) if k not in counts]
    if missing:
        raise MissingCounts(f"missing D_k for k in {missing}")
    return sum(composite_coefficient(n, omega, k, p) * counts[k] for k in range(omega, n + 1))


# ------------------------------------------------------------- repetition code


def _check_odd(d: int) -> None:
    if d < 1 or d % 2 == 0:
        raise ValueError(f"repetition distance must be odd and positive, got {d}")


def repetition_identity_poly(d: int) -> SeriesPoly:
    _check_odd(d)
    w = (d + 1) // 2
    return binomial_sum([math.comb(d, k) if k >= w else 0 for k in range(d + 1)], d)


def repetition_superbranch_poly(d: int) -> SeriesPoly:
    _check_odd(d)
    n, w = d, (d + 1) // 2
    total = SeriesPoly()
    for u in range(w + 1):
        # u = inserted flips that survive (no noise there), each with prob 1 - p
        surv = math.comb(w, u) * SeriesPoly.binomial_term(w - u, w)
        extras = binomial_sum(
            [math.comb(n - w, r) if r >= w - u else 0 for r in range(n - w + 1)], n - w
        )
        total = total + surv * extras
    return total


def repetition_identity_rate(d: int, p: float) -> float:
    _check_odd(d)
    w = (d + 1) // 2
    return sum(math.comb(d, k) * p**k * (1 - p) ** (d - k) for k in range(w, d + 1))


def repetition_superbranch_rate(d: int, p: float) -> float:
    _check_odd(d)
    n, w = d, (d + 1) // 2
    total = 0.0
    for u in range(w + 1):
        surv = math.comb(w, u) * (1 - p) ** u * p ** (w - u)
        extras = sum(
            math.comb(n - w, r) * p**r * (1 - p) ** (n - w - r) for r in range(max(0, w - u), n - w + 1)
        )
        total += surv * extras
    return total


def pec_combination(p_identity: float, p_super: float, n: int, omega: int, p: float) -> float:
    """(P0/A) P_I - C(N, w) (P_w/A) P_S."""
    p0 = (1 - p) ** n
    pw = p**omega * (1 - p) ** (n - omega)
    a = p0 - math.comb(n, omega) * pw
    return (p0 * p_identity - math.comb(n, omega) * pw * p_super) / a


# --------------------------------------------------------------- surface code


def surface_identity_series(counts: FailureCounts, n: int, p: float, noise_kind: str = BIT_FLIP, order: int = 3) -> float:
    """sum_{k=w}^{w+order} D_k q_k with q_k the probability of one weight-k pattern.

    For depolarizing noise D_k is the Pauli-string count from the
    X-count mapping and each pattern has probability (p/3)^k (1-p)^(N-k).
    """
    w = counts.omega
    total = 0.0
    for k in range(w, min(n, w + order) + 1):
        if noise_kind == BIT_FLIP:
            total += counts[k] * p**k * (1 - p) ** (n - k)
        else:
            total += depolarizing_failure_counts(counts, n, k) * (p / 3) ** k * (1 - p) ** (n - k)
    return total


def superbranch_series(f0: float, s: Sequence[float], n: int, p):
    p = np.asarray(p, dtype=float)
    out = f0 * (1 - p) ** n
    for i, si in enumerate(s, start=1):
        out = out + si * p**i * (1 - p) ** (n - i)
    return out


@dataclass
class FitResult:
    kind: str
    inputs: list = field(default_factory=list)
    slope: float | None = None
    intercept: float | None = None
    residuals: list = field(default_factory=list)
    threshold: tuple[float, float] | None = None
    coefficients: tuple[float, ...] = ()
    degenerate: bool = False


def surface_superbranch_fit(samples, f0: float, n: int) -> FitResult:
    """Least-squares (s1, s2, s3) with f0 held fixed."""
    pts = [(float(p), float(v)) for p, v in samples]
    if len(pts) < 4:
        raise ValueError("need at least 4 sample points to fit three coefficients")
    p = np.array([q for q, _ in pts])
    y = np.array([v for _, v in pts]) - f0 * (1 - p) ** n
    design = np.stack([p**i * (1 - p) ** (n - i) for i in (1, 2, 3)], axis=1)
    if np.linalg.matrix_rank(design) < 3:
        raise ValueError("fit is underdetermined: sample points are not distinct enough")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return FitResult("superbranch", pts, coefficients=tuple(float(c) for c in coef), residuals=resid.tolist())


# ------------------------------------------------------- exact cancellation


def _all_patterns(n: int) -> np.ndarray:
    v = np.arange(1 << n, dtype=np.int64)
    return ((v[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def exact_branch_polys(code: CodeSpec, noise_kind: str = BIT_FLIP) -> tuple[SeriesPoly, SeriesPoly]:
    """P_I(p) and P_S(p) by decoding every X pattern; feasible for N <= 20.

    Under depolarizing noise the X component is i.i.d. with rate 2p/3 and
    each inserted letter has an X component with probability 2/3, so only
    X patterns need to be decoded.
    """
    n, w = code.n, code.omega
    if n > MAX_EXACT_QUBITS:
        raise ValueError(f"N={n} is too large for exhaustive enumeration")
    fails = batch_decoder_for(code).failures(_all_patterns(n)).astype(bool)
    failing = np.flatnonzero(fails).astype(np.int64)
    scale = Fraction(1) if noise_kind == BIT_FLIP else Fraction(2, 3)

    ident = np.bincount(np.bitwise_count(failing), minlength=n + 1)
    p_identity = binomial_sum([int(c) for c in ident], n, scale)

    hist = [Fraction(0)] * (n + 1)
    for s in itertools.combinations(range(n), w):
        subsets = [s] if noise_kind == BIT_FLIP else [
            t for r in range(w + 1) for t in itertools.combinations(s, r)
        ]
        for t in subsets:
            mult = 1 if noise_kind == BIT_FLIP else 2 ** len(t)
            mask = sum(1 << q for q in t)
            counts = np.bincount(np.bitwise_count(failing ^ mask), minlength=n + 1)
            for j, c in enumerate(counts):
                if c:
                    hist[j] += mult * int(c)
    norm = math.comb(n, w) * (1 if noise_kind == BIT_FLIP else 3**w)
    p_super = binomial_sum([h / norm for h in hist], n, scale)
    return p_identity, p_super


def pec_rational(code: CodeSpec, noise_kind: str = BIT_FLIP) -> tuple[SeriesPoly, SeriesPoly]:
    """(numerator, denominator) of P_PEC = (P0 P_I - C(N,w) P_w P_S) / A."""
    n, w = code.n, code.omega
    p_i, p_s = exact_branch_polys(code, noise_kind)
    num = _weight_poly(n, 0) * p_i - math.comb(n, w) * _weight_poly(n, w) * p_s
    return num, normalisation_poly(n, w)


def verify_cancellation(code: CodeSpec, noise_kind: str = BIT_FLIP, order: int | None = None) -> SeriesPoly:
    """Taylor series of the exact P_PEC; raises unless its p^omega term is 0."""
    num, den = pec_rational(code, noise_kind)
    order = code.n + 2 if order is None else order
    series = num.series_div(den, order)
    if any(series[k] != 0 for k in range(code.omega + 1)):
        raise CancellationError(
            f"p^{code.omega} coefficient is {series[code.omega]}, expected exact cancellation"
        )
    return series


# --------------------------------------------------------- slopes, thresholds


def fit_slope(points) -> FitResult:
    pts = [(float(p), float(v)) for p, v in points]
    if len(pts) < 2:
        raise ValueError("need at least two points")
    if any(p <= 0 or v <= 0 for p, v in pts):
        raise ValueError("log-log fit needs positive p and values (pass |P_L|)")
    x = np.log([p for p, _ in pts])
    y = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return FitResult("slope", pts, float(slope), float(intercept), resid.tolist())


def estimate_threshold(curves: Mapping[int, Sequence], pair: tuple[int, int] | None = None) -> FitResult:
    """Crossing point of the log-log line fits for two distances (default: two largest)."""
    if pair is None:
        ds = sorted(curves)
        if len(ds) < 2:
            raise ValueError("need curves for at least two distances")
        pair = (ds[-2], ds[-1])
    a = fit_slope([(p, abs(v)) for p, v in curves[pair[0]]])
    b = fit_slope([(p, abs(v)) for p, v in curves[pair[1]]])
    inputs = [pair, a.slope, a.intercept, b.slope, b.intercept]
    if math.isclose(a.slope, b.slope, rel_tol=0, abs_tol=1e-12):
        if math.isclose(a.intercept, b.intercept, rel_tol=0, abs_tol=1e-12):
            return FitResult("threshold", inputs, degenerate=True)
        raise ThresholdError("fitted lines are parallel; no crossing")
    log_p = (b.intercept - a.intercept) / (a.slope - b.slope)
    log_v = a.slope * log_p + a.intercept
    return FitResult("threshold", inputs, threshold=(math.exp(log_p), math.exp(log_v)))


def critical_threshold(d_omega: float, d_pec: float, p_th_pec: float, p_th: float) -> float:
    """p_th* = (D_w / D^PEC_{w+1}) * (P_th^PEC / P_th); compare p_th against it."""
    return d_omega / d_pec * p_th_pec / p_th


def negativity_condition(n: int, omega: int, p: float) -> bool:
    """(1-p)^N > (1 - w/N)/(w + 1): the O(p^(w+1)) logical term is negative."""
    if not 1 <= omega <= n:
        raise ValueError(f"need 1 <= omega <= n, got n={n}, omega={omega}")
    return (1 - p) ** n > (1 - omega / n) / (omega + 1)
