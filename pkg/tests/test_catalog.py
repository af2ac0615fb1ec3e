import json
import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from cocyclelab import catalog
from cocyclelab.catalog import Expectation, check_example, check_expectation
from cocyclelab.cocycle import evaluate
from cocyclelab.dynamics import CirclePoint, TorusPoint, build_word
from cocyclelab.exceptions import InvalidParameter, InvalidSpectrumShape
from cocyclelab.lyapunov import finite_time_spectrum, periodic_spectrum

E = math.e


# --- Walters ------------------------------------------------------------------


def test_walters_generator_values():
    ex = catalog.walters_cocycle(3)
    word = str(build_word(3))
    for o in range(len(word)):
        phi = {"^": 1, "v": -1, "0": 0}[word[o]]
        M = ex.cocycle.generator(ex.system.point(o))
        assert np.array_equal(M, np.array([[0.0, math.exp(phi)], [math.exp(-phi), 0.0]]))
        assert np.linalg.det(M) == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("n", range(1, 7))
def test_walters_product_parity(n):
    ex = catalog.walters_cocycle(4)
    for o in (30, 411, 1200):
        P = evaluate(ex.cocycle, ex.system.point(o), n)
        if n % 2 == 0:
            assert P[0, 1] == 0 and P[1, 0] == 0
        else:
            assert P[0, 0] == 0 and P[1, 1] == 0


def test_walters_needs_level_two():
    with pytest.raises(InvalidParameter):
        catalog.walters_cocycle(1)


def test_walters_check_run_fits_window():
    for level in (2, 3, 4, 6):
        ex = catalog.walters_cocycle(level)
        pts = ex.sample()
        assert len(pts) == ex.sample_count > 0
        assert all(p.origin >= ex.horizon and p.origin + ex.horizon < len(ex.system.word) for p in pts)


def test_walters_rates_brute_force():
    ex = catalog.walters_cocycle(4)
    word = str(build_word(4))
    sym = {"^": 1, "v": -1, "0": 0}
    origins = np.array([50, 333, 1001])
    n = 40
    fwd, bwd = catalog.walters_rates(ex.system, origins, n)
    for o, f, b in zip(origins, fwd, bwd):
        # global parity does not matter once the absolute value is taken
        assert f == pytest.approx(abs(sum((-1) ** j * sym[word[o + j]] for j in range(n))) / n)
        assert b == pytest.approx(abs(sum((-1) ** j * sym[word[o - n + j]] for j in range(n))) / n)


# --- twist ----------------------------------------------------------------------


def test_twist_default_exponents():
    ex = catalog.twist_diagonal()
    for y, top in ((Fraction(1, 4), 0.0), (Fraction(0), 1.0), (Fraction(1, 2), 1.0)):
        v = finite_time_spectrum(ex.cocycle, TorusPoint(Fraction(1, 3), y), 200).values
        assert np.allclose(v, [top, -top], atol=1e-9)


def test_twist_zero_height_function():
    ex = catalog.twist_diagonal(lambda y: np.zeros_like(y), label="zero")
    assert np.array_equal(ex.cocycle.generator(TorusPoint(Fraction(1, 7), Fraction(2, 9))), np.eye(2))
    assert [e.key for e in ex.expected if e.key in ("spectrum_at", "periodic_spectra")] == []


def test_twist_samples_distinct_heights():
    ex = catalog.get("twist_diagonal")
    assert sorted(p.y for p in ex.sample()) == [Fraction(j, 10) for j in range(10)]


# --- block regular -------------------------------------------------------------------


@pytest.mark.parametrize(
    "c, d",
    [([1.0], [1, 1]), ([], []), ([0.0, 1.0], [1, 1]), ([1.0, 1.0], [1, 1]), ([1.0], [0])],
)
def test_block_regular_shape_checks(c, d):
    with pytest.raises(InvalidSpectrumShape):
        catalog.block_regular(c, d)


def test_block_regular_spectrum():
    ex = catalog.block_regular([0.0], [2])
    assert np.allclose(finite_time_spectrum(ex.cocycle, ex.sample(1)[0], 100).values, [0, 0], atol=1e-12)
    ex = catalog.block_regular([0.7, 0.1, -0.5], [1, 2, 1])
    v = finite_time_spectrum(ex.cocycle, ex.sample(1)[0], 2000).values
    assert np.allclose(v, [0.7, 0.1, 0.1, -0.5], atol=1e-3)


def test_block_regular_coupling_keeps_spectrum():
    ex = catalog.block_regular([0.5, -0.5], [1, 1], coupling=lambda xs: 3 * np.cos(2 * np.pi * xs))
    M = ex.cocycle.generator(CirclePoint(0))
    assert M[0, 1] == pytest.approx(3 * math.exp(0) * 1.0)
    assert M[1, 0] == 0
    v = finite_time_spectrum(ex.cocycle, ex.sample(1)[0], 4000).values
    assert np.allclose(v, [0.5, -0.5], atol=2e-3)


def test_block_regular_expectations():
    ex = catalog.block_regular([1.0, 0.0, -1.0], [2, 1, 1])
    keys = {e.key: e for e in ex.expected}
    assert keys["dominated"].value == {"2": True, "3": True}
    assert keys["domination_rate"].value == {"2": 1.0, "3": 1.0}
    assert "det_abs" not in keys


# --- Herman ------------------------------------------------------------------------


def test_herman_requires_lambda_at_least_one():
    with pytest.raises(InvalidParameter):
        catalog.herman_sl2(0.5)


def test_herman_isometric_case():
    ex = catalog.herman_sl2(1.0)
    v = finite_time_spectrum(ex.cocycle, ex.sample(1)[0], 500).values
    assert np.allclose(v, [0, 0], atol=1e-12)


def test_herman_generator_form():
    ex = catalog.herman_sl2(3.0)
    x = CirclePoint(Fraction(1, 8))
    t = 2 * math.pi / 8
    R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    assert np.allclose(ex.cocycle.generator(x), R @ np.diag([3.0, 1 / 3.0]), atol=1e-15)


# --- periodic pair ----------------------------------------------------------------


@pytest.mark.parametrize(
    "mode, at0, at4",
    [("standard", 2.0, 2.0), ("perturbed", 2.0, 1.0), ("uniform", 1.0, 1.0)],
)
def test_periodic_pair_spectra(mode, at0, at4):
    ex = catalog.periodic_pair_example(mode)
    sp0 = periodic_spectrum(ex.cocycle, CirclePoint(0), 2)
    sp4 = periodic_spectrum(ex.cocycle, CirclePoint(Fraction(1, 4)), 2)
    assert [v for v, _ in sp0.pairs] == [pytest.approx(at0), pytest.approx(-at0)]
    assert [v for v, _ in sp4.pairs] == [pytest.approx(at4), pytest.approx(-at4)]


def test_periodic_pair_unknown_mode():
    with pytest.raises(InvalidParameter):
        catalog.periodic_pair_example("other")


# --- registry -----------------------------------------------------------------------


def test_registry_names():
    assert "walters" in catalog.names()
    assert catalog.names() == sorted(catalog.names())
    with pytest.raises(InvalidParameter):
        catalog.get("nope")


@pytest.mark.parametrize("name", catalog.names())
def test_every_expectation_is_tagged(name):
    ex = catalog.get(name)
    assert ex.expected
    assert all(e.provenance in catalog.PROVENANCE for e in ex.expected)


@pytest.mark.parametrize("name", catalog.names())
def test_check_example_passes(name):
    results = check_example(catalog.get(name))
    failed = [r.line() for r in results if not r.passed]
    assert not failed, failed
    assert all(r.line().startswith("PASS") for r in results)


def test_walters_level_three_reports_domination_at_short_horizon():
    # at level 3 the window is too short for the drift to cancel, so the finite-horizon verdict flips
    results = {r.key: r for r in check_example(catalog.walters_cocycle(3))}
    assert not results["dominated"].passed


def test_untagged_expectation_fails():
    ex = catalog.get("identity")
    bad = Expectation("spectrum", [0.0, 0.0], "GUESS")
    r = check_expectation(ex, bad)
    assert not r.passed and r.observed == "untagged"
    ex2 = replace(ex, expected=ex.expected + (bad,))
    assert [r.passed for r in check_example(ex2)][-1] is False


def test_unknown_expectation_key():
    ex = catalog.get("identity")
    with pytest.raises(InvalidParameter):
        check_expectation(ex, Expectation("colour", "blue", "TRIVIAL"))


def test_check_example_key_filter():
    results = check_example(catalog.get("anosov_derivative"), keys=["det_abs"])
    assert [r.key for r in results] == ["det_abs"]


def test_describe_and_export():
    text = catalog.describe("walters")
    assert text.startswith("walters:")
    assert "[PAPER] dominated" in text
    data = catalog.export_expectations()
    assert sorted(data) == catalog.names()
    json.dumps(data)
    assert data["anosov_derivative"]["periodic"][0]["period"] == 1
    assert catalog.export_expectations(["identity"])["identity"]["dim"] == 2
