import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pecqec.codes import PauliString, build_code, is_logical_failure, x_syndrome
from pecqec.decoder import BatchDecoder, TooManyDefects, build_decoding_graph, decode
from pecqec.noise import keyed_rng


def graph(kind, d, **kw):
    return build_decoding_graph(build_code(kind, d), **kw)


def brute_force_weight(defects, dist, boundary):
    """Minimum over every pairing in which each defect meets a partner or the boundary."""
    if not defects:
        return 0
    a, rest = defects[0], defects[1:]
    best = dist[a, boundary] + brute_force_weight(rest, dist, boundary)
    for i, b in enumerate(rest):
        best = min(best, dist[a, b] + brute_force_weight(rest[:i] + rest[i + 1:], dist, boundary))
    return best


def test_repetition_graph_is_a_path():
    g = graph("repetition", 3)
    assert g.n_checks == 2 and g.boundary == 2
    assert sorted((u, v) for u, v, _, _ in g.edges) == [(0, 1), (0, 2), (1, 2)]
    assert g.dist[0, 1] == 1 and g.dist[0, 2] == 1 and g.dist[1, 2] == 1


@pytest.mark.parametrize("kind,d", [(k, d) for k in ("repetition", "surface") for d in (3, 5, 7, 9)])
def test_graph_invariants(kind, d):
    g = graph(kind, d)
    assert np.array_equal(g.dist, g.dist.T)
    assert np.all(np.diag(g.dist) == 0)
    assert g.dist.max() <= d
    if kind == "surface":
        assert g.n_checks == (d * d - 1) // 2
    # each qubit lies on exactly one edge of the graph (or a parallel copy)
    hz = g.code.z_check_matrix
    for q in range(g.code.n):
        assert 1 <= hz[:, q].sum() <= 2


def test_surface_d3_graph_size():
    assert graph("surface", 3).n_checks == 4


def test_decode_examples():
    g = graph("repetition", 3)
    assert decode(g, (0, 0)).pauli.is_identity()
    corr = decode(g, (1, 0))
    assert corr.pauli == PauliString.from_letters("XII")
    assert corr.weight == 1


@pytest.mark.parametrize("kind", ["repetition", "surface"])
def test_matching_is_optimal_on_every_d3_syndrome(kind):
    g = graph(kind, 3)
    code = g.code
    for bits in itertools.product((0, 1), repeat=g.n_checks):
        corr = decode(g, bits)
        defects = [i for i, b in enumerate(bits) if b]
        assert corr.weight == brute_force_weight(defects, g.dist, g.boundary)
        assert x_syndrome(code, corr.pauli) == bits
        assert corr.pauli.weight == corr.weight
        matched = sorted(x for pair in corr.matched_pairs for x in pair if x >= 0)
        assert matched == defects


@pytest.mark.parametrize("kind,d", [(k, d) for k in ("repetition", "surface") for d in (3, 5)])
def test_low_weight_errors_always_corrected(kind, d):
    code = build_code(kind, d)
    dec = BatchDecoder(build_decoding_graph(code))
    for k in range(code.omega):
        rows = list(itertools.combinations(range(code.n), k))
        x = np.zeros((len(rows), code.n), dtype=np.uint8)
        for i, s in enumerate(rows):
            x[i, list(s)] = 1
        assert dec.failures(x).sum() == 0


@pytest.mark.parametrize("kind,d", [(k, d) for k in ("repetition", "surface") for d in (7, 9)])
def test_low_weight_errors_corrected_sampled(kind, d):
    code = build_code(kind, d)
    dec = BatchDecoder(build_decoding_graph(code))
    rng = keyed_rng(11, d)
    for k in range(1, code.omega):
        orders = np.argsort(rng.random((3000, code.n)), axis=1)[:, :k]
        x = np.zeros((3000, code.n), dtype=np.uint8)
        x[np.arange(3000)[:, None], orders] = 1
        assert dec.failures(x).sum() == 0


def test_single_qubit_surface_errors_leave_stabilizers():
    code = build_code("surface", 3)
    g = build_decoding_graph(code)
    for q in range(9):
        e = PauliString.from_support(9, [q])
        residual = e * decode(g, x_syndrome(code, e)).pauli
        assert not any(x_syndrome(code, residual))
        assert not is_logical_failure(code, residual)


@given(st.integers(0, (1 << 25) - 1))
def test_correction_clears_syndrome_d5(mask):
    code = build_code("surface", 5)
    g = _G5
    e = PauliString(25, mask, 0)
    residual = e * decode(g, x_syndrome(code, e)).pauli
    assert not any(x_syndrome(code, residual))


_G5 = build_decoding_graph(build_code("surface", 5))


def test_decoding_is_deterministic():
    code = build_code("surface", 5)
    a = build_decoding_graph(code)
    b = build_decoding_graph(code)
    rng = keyed_rng(0, 9)
    for _ in range(200):
        bits = tuple(int(v) for v in rng.integers(0, 2, a.n_checks))
        assert decode(a, bits) == decode(b, bits)


def test_batch_matches_scalar_path():
    code = build_code("surface", 3)
    g = build_decoding_graph(code)
    dec = BatchDecoder(g)
    x = np.array([[(v >> q) & 1 for q in range(9)] for v in range(512)], dtype=np.uint8)
    fails = dec.failures(x)
    for v in range(512):
        e = PauliString(9, v, 0)
        residual = e * decode(g, x_syndrome(code, e)).pauli
        assert fails[v] == int(is_logical_failure(code, residual))


def test_defect_cap_and_length_checks():
    g = graph("surface", 5, max_defects=2)
    with pytest.raises(TooManyDefects):
        decode(g, (1, 1, 1) + (0,) * (g.n_checks - 3))
    with pytest.raises(ValueError):
        decode(g, (0, 1))
