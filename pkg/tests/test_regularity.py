import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocyclelab import catalog
from cocyclelab.cocycle import GeneratorCocycle, normalize_det
from cocyclelab.dynamics import CirclePoint, Rotation, TorusPoint, build_word, golden_rotation_number, junction_offsets
from cocyclelab.exceptions import EmptySample, InvalidParameter, WindowExhausted
from cocyclelab.lyapunov import geometric_schedule
from cocyclelab.regularity import (
    CONSISTENT,
    INCONCLUSIVE,
    IRREGULAR,
    NOT_REGULAR,
    REGULAR,
    ProbeConfig,
    common_exponent,
    oscillation_witness,
    probe_complete_regularity,
    probe_point,
    probe_points,
    spectrum_spread,
)

E = math.e
GOLDEN_LOG = math.log((3 + math.sqrt(5)) / 2)
X0 = CirclePoint(Fraction(1, 3))
SYM = {"^": 1, "v": -1, "0": 0}


def const(M, alpha=None):
    return GeneratorCocycle(Rotation(alpha if alpha is not None else golden_rotation_number()), constant=M)


def _walters_window_rate(word, start, n):
    """|sum_j (-1)^j phi(word[start + j])| / n, the top exponent over that window."""
    return abs(sum((-1) ** j * SYM[word[start + j]] for j in range(n))) / n


# --- single-point probe ------------------------------------------------------


def test_constant_diagonal_is_regular():
    r = probe_point(const(np.diag([E**0.7, E**-0.4])), X0, 512)
    assert r.verdict == REGULAR
    assert r.discrepancy <= 1e-9
    assert np.allclose(r.forward_spectrum.values, [0.7, -0.4], atol=1e-12)
    # the backward spectrum is that of A(x, -n): negated and reversed
    assert np.allclose(r.backward_spectrum.values, [0.4, -0.7], atol=1e-12)


def test_anosov_fixed_point_probe():
    ex = catalog.anosov_derivative()
    r = probe_point(ex.cocycle, TorusPoint(0, 0), 400)
    assert r.verdict == REGULAR
    assert np.allclose(r.forward_spectrum.values, [GOLDEN_LOG, -GOLDEN_LOG], atol=1e-6)
    assert np.allclose(r.backward_spectrum.values, [GOLDEN_LOG, -GOLDEN_LOG], atol=1e-6)


def test_walters_junction_discrepancy_matches_brute_force():
    ex = catalog.walters_cocycle(6)
    word = str(build_word(6))
    o = int(junction_offsets(6, 1)[1])
    n = 4
    r = probe_point(ex.cocycle, ex.system.point(o), n)
    fwd = _walters_window_rate(word, o, n)
    bwd = _walters_window_rate(word, o - n, n)
    assert r.discrepancy == pytest.approx(abs(fwd - bwd), abs=1e-12)
    assert r.discrepancy >= 0.3
    assert r.verdict != REGULAR
    # only the last checkpoint sees the switch
    assert [m for m, _ in r.checkpoint_discrepancies] == [1, 2, 4]


@pytest.mark.parametrize("k", [1, 2, 3])
def test_walters_checkpoints_match_brute_force(k):
    ex = catalog.walters_cocycle(6)
    word = str(build_word(6))
    o = int(junction_offsets(6, k)[2])
    n = 8 * 4**k
    r = probe_point(ex.cocycle, ex.system.point(o), n)
    for m, disc in r.checkpoint_discrepancies:
        expect = abs(_walters_window_rate(word, o, m) - _walters_window_rate(word, o - m, m))
        assert disc == pytest.approx(expect, abs=1e-10)


def test_probe_window_exhausted():
    ex = catalog.walters_cocycle(3)
    with pytest.raises(WindowExhausted):
        probe_point(ex.cocycle, ex.system.point(5), 64)


@pytest.mark.parametrize("name", [n for n in catalog.names() if catalog.get(n).periodic])
def test_periodic_points_probe_regular(name):
    ex = catalog.get(name)
    for p, k in ex.periodic:
        r = probe_point(ex.cocycle, p, 100 * k)
        assert r.verdict == REGULAR
        assert r.discrepancy <= 1e-6


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["herman_sl2", "walters", "anosov_derivative", "twist_diagonal"]), st.integers(0, 50))
def test_unimodular_spectra_are_symmetric(name, seed):
    ex = catalog.get(name)
    x = ex.sample(1, seed=seed, margin=600 if name == "walters" else 0)[0]
    v = probe_point(ex.cocycle, x, 512).forward_spectrum.values
    assert v[0] >= 0
    assert v[1] == pytest.approx(-v[0], abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.integers(0, 20))
def test_normalize_det_shifts_spectrum(a, b, seed):
    gen = lambda p: np.array([[a * (2 + math.cos(2 * math.pi * float(p.x))), 1.0], [0.0, b]])
    c = GeneratorCocycle(Rotation(golden_rotation_number()), generator=gen, dim=2)
    x = CirclePoint(Fraction(seed, 21))
    n = 300
    raw = probe_point(c, x, n).forward_spectrum.values
    nor = probe_point(normalize_det(c), x, n).forward_spectrum.values
    # oracle: the mean of the log-determinants along the orbit
    logdet = np.mean([math.log(abs(np.linalg.det(gen(p)))) for p in Rotation(golden_rotation_number()).orbit(x, n)])
    assert np.allclose(nor, raw - logdet / 2, atol=1e-9)


def test_report_json_and_summary():
    r = probe_point(const(np.diag([E, 1 / E])), X0, 64)
    rec = r.to_json()
    assert rec["verdict"] == REGULAR
    assert rec["n"] == 64
    assert "n=64" in r.summary_line()


def test_batched_probe_matches_single():
    ex = catalog.get("herman_sl2")
    pts = ex.sample(4, seed=9)
    many = probe_points(ex.cocycle, pts, 256)
    for x, r in zip(pts, many):
        one = probe_point(ex.cocycle, x, 256)
        assert np.allclose(one.forward_spectrum.values, r.forward_spectrum.values, atol=1e-12)
        assert one.verdict == r.verdict


# --- complete regularity ------------------------------------------------------


def test_block_regular_is_consistent():
    ex = catalog.get("block_regular")
    rep = probe_complete_regularity(ex.cocycle, ex.sample(32), 2**14)
    assert rep.verdict == CONSISTENT
    assert np.abs(rep.per_point_spectra - np.array([1.0, -1.0])).max() <= 0.01
    assert rep.verdict_counts()[REGULAR] == 32


def test_twist_is_not_completely_regular():
    ex = catalog.get("twist_diagonal")
    rep = probe_complete_regularity(ex.cocycle, ex.sample(), 2**10)
    assert rep.verdict == NOT_REGULAR
    # oracle: sorted exponents +-|cos(2 pi y)| at y = j/10, so the L1 spread is 2 (max - min) of |cos|
    h = [abs(math.cos(2 * math.pi * j / 10)) for j in range(10)]
    assert rep.spectrum_spread == pytest.approx(2 * (max(h) - min(h)), abs=1e-9)


def test_walters_is_not_completely_regular():
    ex = catalog.walters_cocycle(6)
    rep = probe_complete_regularity(ex.cocycle, ex.sample(64), 2**12)
    assert rep.verdict == NOT_REGULAR
    counts = rep.verdict_counts()
    assert sum(counts.values()) == 64


def test_perturbed_periodic_pair_spreads():
    ex = catalog.get("periodic_pair_perturbed")
    rep = probe_complete_regularity(ex.cocycle, ex.sample(), 1000)
    assert rep.spectrum_spread > 0.05
    assert rep.verdict == NOT_REGULAR
    ok = probe_complete_regularity(catalog.get("periodic_pair").cocycle, ex.sample(), 1000)
    assert ok.verdict == CONSISTENT


def test_complete_regularity_empty_sample():
    with pytest.raises(EmptySample):
        probe_complete_regularity(const(np.eye(2)), [], 10)


def test_verdict_labels_are_distinct():
    assert len({REGULAR, IRREGULAR, INCONCLUSIVE, CONSISTENT, NOT_REGULAR}) == 5
    assert ProbeConfig().tol > 0


def test_spectrum_spread_is_l1():
    assert spectrum_spread([[1.0, -1.0], [0.5, -0.25]]) == pytest.approx(1.25)
    assert spectrum_spread([[0.0, 0.0]]) == 0.0


# --- oscillation witnesses ------------------------------------------------------


def test_oscillation_constant_diagonal():
    c = const(np.diag([E, 1 / E]))
    sample = [CirclePoint(Fraction(j, 5)) for j in range(5)]
    w = oscillation_witness(c, sample, sample, 0.5, 1.5, [8, 64, 512])
    assert w.i_witnesses == [] and w.i_failures == list(range(5))
    assert w.s_witnesses == [] and w.s_failures == list(range(5))


def test_oscillation_identity():
    c = const(np.eye(2))
    sample = [X0]
    w = oscillation_witness(c, sample, sample, -1.0, 1.0, [4, 16])
    assert w.i_failures == [0] and w.s_failures == [0]


def test_oscillation_requires_alpha_below_beta():
    with pytest.raises(InvalidParameter):
        oscillation_witness(const(np.eye(2)), [X0], [X0], 1.0, 1.0, [4])


def test_oscillation_records_first_hit():
    c = const(np.diag([E**0.3, E**-0.3]))
    w = oscillation_witness(c, [X0], [X0], 0.35, 0.4, [2, 4])
    assert w.i_witnesses == [(0, 2, pytest.approx(0.3))]
    assert w.s_failures == [0]
    assert w.to_json()["i_witnesses"][0]["n"] == 2


def test_walters_witnesses_found_by_scan():
    ex = catalog.walters_cocycle(6)
    n = 2**12
    I, S = catalog.walters_witness_offsets(ex.system, n, 0.1, 0.12, 8)
    w = oscillation_witness(ex.cocycle, I, S, 0.1, 0.12, [n])
    assert len(w.i_witnesses) == len(I) > 0
    assert len(w.s_witnesses) == len(S) > 0


# --- common exponent -----------------------------------------------------------


def test_common_exponent():
    centre, count = common_exponent([0.1, 0.5, 0.52, 0.55, 0.9])
    assert count == 3
    assert centre == pytest.approx(0.525)
    assert common_exponent([0.2, 0.8]) == (0.8, 1)
    with pytest.raises(EmptySample):
        common_exponent([])


def test_geometric_schedule_feeds_witnesses():
    c = const(np.diag([E**2, E**-2]))
    w = oscillation_witness(c, [], [X0], 0.0, 1.0, geometric_schedule(64))
    assert w.s_witnesses[0][1] == 16
