import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pecqec.codes import (
    PauliString,
    SyndromeError,
    array_to_mask,
    build_code,
    build_repetition_code,
    build_rotated_surface_code,
    enumerate_supports,
    is_logical_failure,
    mask_to_array,
    support_chunks,
    syndrome,
    x_syndrome,
)

ALL_CODES = [("repetition", d) for d in (3, 5, 7, 9)] + [("surface", d) for d in (3, 5, 7, 9)]


def pauli(n):
    return st.builds(PauliString, st.just(n), st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1))


@given(pauli(12), pauli(12), pauli(12))
def test_compose_is_associative_and_self_inverse(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert (a * a).is_identity()
    assert a.weight == (a.x_mask | a.z_mask).bit_count()


@given(pauli(10), pauli(10))
def test_commutation_is_symmetric(a, b):
    assert a.commutes_with(b) == b.commutes_with(a)


def test_letters_round_trip():
    p = PauliString.from_letters("XIZY")
    assert (p.x_mask, p.z_mask) == (0b1001, 0b1100)
    assert str(p) == "XIZY"
    assert p.weight == 3
    with pytest.raises(ValueError):
        PauliString.from_letters("XQ")
    with pytest.raises(ValueError):
        PauliString(3, 8, 0)


def test_mask_array_round_trip():
    arr = mask_to_array(0b10110, 6)
    assert arr.tolist() == [0, 1, 1, 0, 1, 0]
    assert array_to_mask(arr) == 0b10110


@pytest.mark.parametrize("kind,d", ALL_CODES)
def test_code_invariants(kind, d):
    code = build_code(kind, d)
    code.check_invariants()
    assert code.omega == math.ceil(d / 2)
    assert code.n == (d if kind == "repetition" else d * d)
    for s in code.stabilizers:
        assert code.logical_z.commutes_with(s) and code.logical_x.commutes_with(s)
    assert not code.logical_z.commutes_with(code.logical_x)


def test_repetition_structure():
    code = build_repetition_code(3)
    assert [str(s) for s in code.stabilizers] == ["ZZI", "IZZ"]
    assert len(build_repetition_code(5).stabilizers) == 4
    assert build_repetition_code(9).omega == 5
    assert code.logical_z == PauliString.from_support(3, range(3), "Z")


def test_surface_structure():
    code = build_rotated_surface_code(3)
    assert code.n == 9
    assert code.stabilizer_types.count("Z") == 4 and code.stabilizer_types.count("X") == 4
    weights = sorted(s.weight for s in code.stabilizers)
    assert weights == [2, 2, 2, 2, 4, 4, 4, 4]
    five = build_rotated_surface_code(5)
    assert (five.n, five.omega) == (25, 3)
    assert five.stabilizer_types.count("Z") == 12


@pytest.mark.parametrize("bad", [1, 2, 4, 0, -3])
def test_rejects_bad_distance(bad):
    with pytest.raises(ValueError):
        build_repetition_code(bad)
    with pytest.raises(ValueError):
        build_rotated_surface_code(bad)


def _min_undetected_x_logical(code):
    best = None
    for v in range(1, 1 << code.n):
        e = PauliString(code.n, v, 0)
        if not any(x_syndrome(code, e)) and not e.commutes_with(code.logical_z):
            w = e.weight
            best = w if best is None else min(best, w)
    return best


@pytest.mark.parametrize("kind", ["repetition", "surface"])
def test_x_distance_is_d_at_d3(kind):
    assert _min_undetected_x_logical(build_code(kind, 3)) == 3


def test_surface_z_distance_is_d_at_d3():
    code = build_rotated_surface_code(3)
    best = min(
        PauliString(9, 0, v).weight
        for v in range(1, 512)
        if all(PauliString(9, 0, v).commutes_with(s) for s in code.stabilizers)
        and not PauliString(9, 0, v).commutes_with(code.logical_x)
    )
    assert best == 3


def test_syndrome_examples():
    rep = build_repetition_code(3)
    assert syndrome(rep, PauliString.from_letters("XII")) == (1, 0)
    assert syndrome(rep, PauliString.identity(3)) == (0, 0)
    assert syndrome(rep, PauliString.from_letters("XXX")) == (0, 0)
    with pytest.raises(ValueError):
        syndrome(rep, PauliString.identity(4))


def test_repetition_trivial_syndromes_exhaustive():
    rep = build_repetition_code(3)
    trivial = [v for v in range(8) if not any(syndrome(rep, PauliString(3, v, 0)))]
    assert trivial == [0, 0b111]


@pytest.mark.parametrize("kind,d", ALL_CODES)
def test_single_x_errors_are_detected(kind, d):
    code = build_code(kind, d)
    for q in range(code.n):
        assert any(x_syndrome(code, PauliString.from_support(code.n, [q])))


@given(st.integers(0, (1 << 9) - 1), st.integers(0, (1 << 9) - 1), st.integers(0, (1 << 9) - 1), st.integers(0, (1 << 9) - 1))
def test_syndrome_is_linear(x1, z1, x2, z2):
    code = build_rotated_surface_code(3)
    a, b = PauliString(9, x1, z1), PauliString(9, x2, z2)
    lhs = syndrome(code, a * b)
    rhs = tuple(u ^ v for u, v in zip(syndrome(code, a), syndrome(code, b)))
    assert lhs == rhs


def test_is_logical_failure_examples():
    code = build_rotated_surface_code(3)
    assert not is_logical_failure(code, PauliString.identity(9))
    assert is_logical_failure(code, code.logical_x)
    # Z-only strings never flip the Z observable, even a logical Z
    assert not is_logical_failure(code, code.logical_z)
    with pytest.raises(SyndromeError):
        is_logical_failure(code, PauliString.from_support(9, [4]))


def test_enumerate_supports():
    assert list(enumerate_supports(3, 2)) == [(0, 1), (0, 2), (1, 2)]
    assert sum(1 for _ in enumerate_supports(9, 2)) == 36
    assert sum(1 for _ in enumerate_supports(49, 4)) == 211876
    with pytest.raises(ValueError):
        list(enumerate_supports(3, 4))
    with pytest.raises(ValueError):
        list(enumerate_supports(3, -1))


def test_support_chunks_cover_every_support_once():
    rows = np.concatenate(list(support_chunks(8, 3, chunk=7)))
    assert rows.shape == (math.comb(8, 3), 3)
    assert {tuple(r) for r in rows} == set(enumerate_supports(8, 3))


def test_layout_hash_is_stable_and_distinct():
    hashes = {build_code(k, d).layout_hash for k, d in ALL_CODES}
    assert len(hashes) == len(ALL_CODES)
    assert build_code("surface", 3).layout_hash == build_code("surface", 3).layout_hash


def test_checkerboard_logical_on_column_zero():
    code = build_rotated_surface_code(5)
    assert sorted(itertools.compress(range(25), mask_to_array(code.logical_z.z_mask, 25))) == [0, 5, 10, 15, 20]
    assert sorted(itertools.compress(range(25), mask_to_array(code.logical_x.x_mask, 25))) == [0, 1, 2, 3, 4]
