import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pecqec.codes import build_code
from pecqec.noise import BIT_FLIP, DEPOLARIZING, NoiseSpec, keyed_rng
from pecqec.pec import PoleError, build_inverse_channel, combination_factor, pole, sample_branch, sampling_overhead


def channel(kind, d, p, noise=BIT_FLIP):
    code = build_code(kind, d)
    return build_inverse_channel(code, NoiseSpec(noise, p, code.n))


def test_d3_repetition_numbers():
    spec = channel("repetition", 3, 0.1)
    assert spec.A == pytest.approx(0.9 * 0.78, abs=1e-15)
    assert spec.l1_norm == pytest.approx(0.756 / 0.702, abs=1e-14)
    assert sampling_overhead(spec) == pytest.approx((0.756 / 0.702) ** 2, abs=1e-14)
    assert sampling_overhead(spec) == pytest.approx(1.1597, abs=1e-4)
    assert 1 - spec.superbranch_probability == pytest.approx(0.729 / 0.756, abs=1e-14)
    assert spec.superbranch_probability == pytest.approx(0.0357, abs=5e-5)
    assert combination_factor(spec) == pytest.approx(0.027 / 0.702, abs=1e-15)
    assert combination_factor(spec) == pytest.approx(0.03846, abs=5e-6)


def test_zero_noise_is_identity():
    spec = channel("surface", 5, 0.0, DEPOLARIZING)
    assert spec.identity_weight == 1 and spec.superbranch_total_weight == 0
    assert sampling_overhead(spec) == 1 and combination_factor(spec) == 0
    rng = keyed_rng(0, 0)
    assert all(sample_branch(spec, rng) == (1, spec_id) for spec_id in [sample_branch(spec, rng)[1]] * 100)


def test_pole_values():
    assert pole(3, 2) == pytest.approx(1 / (1 + math.sqrt(3)), abs=1e-12)
    assert pole(3, 2) == pytest.approx(0.36603, abs=1e-5)
    assert 0.028 <= pole(81, 5) <= 0.036
    with pytest.raises(ValueError):
        pole(3, 4)
    with pytest.raises(ValueError):
        pole(3, 0)
    with pytest.raises(TypeError):
        pole(3.0, 2)


@pytest.mark.parametrize("kind", ["repetition", "surface"])
def test_pole_decreases_along_family(kind):
    poles = [pole(build_code(kind, d).n, build_code(kind, d).omega) for d in (3, 5, 7, 9)]
    assert all(a > b for a, b in zip(poles, poles[1:]))


def test_repetition_poles_stay_above_one_fifth():
    assert all(pole(d, (d + 1) // 2) > 0.2 for d in range(3, 202, 2))


@given(st.integers(1, 6), st.integers(0, 40))
def test_pole_strictly_decreasing_in_n(omega, extra):
    n = omega + extra
    assert pole(n + 1, omega) < pole(n, omega)


def test_circuit_level_pole_scaling():
    """N = d^3 locations: the pole approaches 1/(2 e d^2) from above, slowly."""
    ratios = {d: pole(d**3, (d + 1) // 2) * 2 * math.e * d * d for d in range(9, 43, 2)}
    vals = list(ratios.values())
    assert all(a > b > 1 for a, b in zip(vals, vals[1:]))
    assert 1.3 < ratios[15] < 1.4 and 1.5 < ratios[9] < 1.6
    assert all(r < 1.25 for d, r in ratios.items() if d >= 25)


def test_pole_violation_is_an_error():
    with pytest.raises(PoleError):
        channel("repetition", 3, 0.37)
    with pytest.raises(PoleError):
        channel("surface", 9, 0.032)


@given(
    st.sampled_from([("repetition", 3), ("repetition", 7), ("surface", 3), ("surface", 5)]),
    st.sampled_from([BIT_FLIP, DEPOLARIZING]),
    st.floats(0, 0.999),
)
def test_channel_invariants(code_d, noise, frac):
    code = build_code(*code_d)
    p = frac * pole(code.n, code.omega)
    spec = build_inverse_channel(code, NoiseSpec(noise, p, code.n))
    assert spec.A > 0
    assert spec.l1_norm >= 1.0
    if p > 1e-6:
        assert spec.l1_norm > 1.0
    assert abs(spec.identity_weight) + abs(spec.superbranch_total_weight) == pytest.approx(spec.l1_norm, rel=1e-12)
    probs = abs(spec.identity_weight) / spec.l1_norm + spec.superbranch_probability
    assert probs == pytest.approx(1.0, abs=1e-12)
    g = combination_factor(spec)
    # the two combination forms agree for arbitrary branch rates
    pi, ps = 0.3, 0.7
    direct = spec.identity_weight * pi + spec.superbranch_total_weight * ps
    assert direct == pytest.approx((1 + g) * pi - g * ps, rel=1e-9, abs=1e-12)


def test_overhead_increases_towards_pole():
    code = build_code("surface", 5)
    bound = pole(code.n, code.omega)
    vals = [sampling_overhead(build_inverse_channel(code, NoiseSpec(BIT_FLIP, f * bound, code.n)))
            for f in np.linspace(0, 0.999, 30)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 1e3


def test_branch_letter_count():
    assert channel("surface", 3, 0.01, DEPOLARIZING).n_branches == 36 * 9
    assert channel("surface", 3, 0.01).n_branches == 36


def test_branch_frequency_and_weights():
    spec = channel("repetition", 3, 0.1)
    rng = keyed_rng(3, 0)
    draws = 200_000
    hits = 0
    for _ in range(draws):
        sign, ins = sample_branch(spec, rng)
        if sign < 0:
            hits += 1
            assert ins.weight == 2 and ins.z_mask == 0
        else:
            assert ins.is_identity()
    pi = spec.superbranch_probability
    assert abs(hits / draws - pi) < 3 * math.sqrt(pi * (1 - pi) / draws)


def test_depolarizing_branch_letters():
    spec = channel("surface", 3, 0.02, DEPOLARIZING)
    rng = keyed_rng(4, 0)
    seen = set()
    while len(seen) < 3:
        sign, ins = sample_branch(spec, rng)
        if sign < 0:
            assert ins.weight == 2
            for q in range(9):
                x, z = (ins.x_mask >> q) & 1, (ins.z_mask >> q) & 1
                if x or z:
                    seen.add((x, z))
    assert seen == {(1, 0), (1, 1), (0, 1)}
