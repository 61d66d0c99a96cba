"""Experiment layer: scheme-parameter tables, order estimation, refinement
studies, the embedded quotient-error table, and the cross-module validation
suite (including its fault-injection hooks, which prove the checks can fail).
"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import fracpme.harness as harness
from fracpme.core import ConfigError, initial_data_preset
from fracpme.harness import (
    OPTIMAL,
    PRACTICAL,
    ConvergenceReport,
    SchemeMode,
    SchemeParams,
    StudySetup,
    bridge_order_fit,
    estimate_order,
    run_convergence,
    run_sigma_table,
    run_validate,
    select_scheme_params,
    write_loglog_svg,
)


# ---------------------------------------------------------------------------
# scheme modes


def test_scheme_mode_parse_and_label():
    assert SchemeMode.parse("optimal") == OPTIMAL
    assert SchemeMode.parse(" Practical ") == PRACTICAL
    mode = SchemeMode.parse("minimal:0.5")
    assert mode.kind == "minimal" and mode.delta == 0.5
    assert mode.label() == "minimal:0.5"
    assert OPTIMAL.label() == "optimal"


def test_scheme_mode_rejects_bad_specs():
    with pytest.raises(ConfigError):
        SchemeMode("turbo")
    with pytest.raises(ConfigError):
        SchemeMode("minimal")                 # needs delta
    with pytest.raises(ConfigError):
        SchemeMode("minimal", -0.1)
    with pytest.raises(ConfigError):
        SchemeMode("optimal", 0.5)            # takes no delta
    with pytest.raises(ConfigError):
        SchemeMode.parse("minimal:nope")


OPTIMAL_ROWS = [
    # sigma -> (a, c, d, p, has_note)
    (0.3, 3.4, 4, 4, 1.7, False),
    (0.5, 3.0, 4, 4, 1.5, True),
    (0.75, 2.5, 3, 4, 1.25, False),
    (1.0, 2.0, 2, None, 1.0, False),
    (1.3, 2.0, 3, 4, 1.3, False),
    (1.5, 2.0, 3, 4, 1.5, False),
    (1.9, 2.0, 3, 4, 1.9, False),
]

PRACTICAL_ROWS = [
    (0.3, 0.6, 2, 2, 0.3, False),
    (0.5, 1.0, 2, 3, 0.5, True),
    (0.75, 1.5, 2, 3, 0.75, False),
    (1.0, 2.0, 2, None, 1.0, False),
    (1.5, 2.0, 3, 4, 1.5, False),
]


@pytest.mark.parametrize("sigma,a,c,d,p,noted", OPTIMAL_ROWS)
def test_optimal_table(sigma, a, c, d, p, noted):
    got = select_scheme_params(sigma, OPTIMAL)
    assert (got.a, got.c, got.d, got.p) == (a, c, d, p)
    assert (got.note is not None) == noted


@pytest.mark.parametrize("sigma,a,c,d,p,noted", PRACTICAL_ROWS)
def test_practical_table(sigma, a, c, d, p, noted):
    got = select_scheme_params(sigma, PRACTICAL)
    assert (got.a, got.c, got.d, got.p) == (a, c, d, p)
    assert (got.note is not None) == noted


def test_minimal_table_rows():
    got = select_scheme_params(0.3, SchemeMode("minimal", 0.2))
    assert (got.a, got.c, got.d, got.p) == (0.5, 1, 1, 0.3)
    got = select_scheme_params(0.5, SchemeMode("minimal", 0.5))
    assert (got.c, got.d) == (1, 2)
    assert got.note is not None
    got = select_scheme_params(1.0, SchemeMode("minimal", 0.3))
    assert (got.c, got.d) == (2, None)
    got = select_scheme_params(1.2, SchemeMode("minimal", 0.4))
    assert (got.c, got.d) == (2, 3)
    got = select_scheme_params(1.5, SchemeMode("minimal", 0.4))
    assert (got.c, got.d) == (3, 4)
    assert got.note is not None


def test_minimal_mode_validates_attainability():
    # a = sigma + delta beyond what the table pair delivers must be refused
    with pytest.raises(ConfigError):
        select_scheme_params(0.5, SchemeMode("minimal", 0.6))  # asks 1.1 > 1.0
    with pytest.raises(ConfigError):
        select_scheme_params(0.3, SchemeMode("minimal", 0.5))  # asks 0.8 > 0.7


# ---------------------------------------------------------------------------
# order estimation


def test_estimate_order_exact_power_law():
    assert estimate_order(0.5 ** 1.7, 0.25 ** 1.7, 0.5, 0.25) == pytest.approx(
        1.7, rel=1e-12)


def test_estimate_order_on_rounded_table_entries():
    # the embedded quotient table carries 1.0340 at (sigma=1, y=0.125) because
    # it is fitted from unrounded errors; refitting from the 4-decimal rounded
    # entries gives 1.0339 -- both are checked so the distinction stays visible
    got = estimate_order(0.2580, 0.1260, 0.25, 0.125)
    assert round(got, 4) == 1.0339
    assert abs(got - 1.0340) < 1.5e-4


@given(scale=st.floats(1e-6, 1e6), e1=st.floats(0.01, 10.0),
       ratio=st.floats(1.1, 20.0))
def test_estimate_order_is_scale_invariant(scale, e1, ratio):
    e2 = e1 / ratio
    base = estimate_order(e1, e2, 0.5, 0.25)
    assert estimate_order(scale * e1, scale * e2, 0.5, 0.25) == pytest.approx(
        base, rel=1e-9, abs=1e-9)
    # swapping the two levels measures the same slope
    assert estimate_order(e2, e1, 0.25, 0.5) == pytest.approx(base, rel=1e-12)


def test_estimate_order_rejects_bad_inputs():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            estimate_order(bad, 1.0, 0.5, 0.25)
        with pytest.raises(ValueError):
            estimate_order(1.0, 1.0, bad, 0.25)
    with pytest.raises(ValueError):
        estimate_order(1.0, 0.5, 0.25, 0.25)


# ---------------------------------------------------------------------------
# embedded quotient-error table


def test_sigma_table_matches_embedded_values():
    res = run_sigma_table()
    assert res.ok, res.mismatches
    assert res.csv.startswith("sigma,y,E,alpha,sigma_e\n")
    assert "1.0000,0.1250,0.1260,1.0340,0.9660" in res.csv


def test_sigma_table_single_row_and_passthrough():
    res = run_sigma_table(sigmas=(1.0,))
    assert res.ok
    assert "0.5000,0.5000" not in res.csv
    # a sigma without embedded expectations rides along unchecked
    res = run_sigma_table(sigmas=(0.75, 1.0))
    assert res.ok
    assert "0.7500,0.5000" in res.csv


def test_sigma_table_skips_off_ladder_heights():
    res = run_sigma_table(sigmas=(0.5,), ys=(0.3, 0.15))
    assert res.ok and res.mismatches == ()


def test_sigma_table_detects_a_planted_mismatch(monkeypatch):
    bad = {"E": (0.2008, 0.0645, 0.0223, 0.9999),
           "alpha": (None, 1.6388, 1.5340, 1.5085),
           "sigma_e": (None, 0.3612, 0.4660, 0.4915)}
    monkeypatch.setitem(harness.TABLE_EXPECTED, 0.5, bad)
    res = run_sigma_table(sigmas=(0.5,))
    assert not res.ok
    assert len(res.mismatches) == 1
    mm = res.mismatches[0]
    assert (mm.sigma, mm.y, mm.column, mm.expected) == (0.5, 0.0625, "E", 0.9999)
    assert mm.computed == pytest.approx(0.0078, abs=5e-5)


# ---------------------------------------------------------------------------
# validation suite and its fault hooks


def test_bridge_order_fit_sees_two_minus_sigma():
    slope, errs = bridge_order_fit(0.5)
    assert slope == pytest.approx(1.5, abs=0.15)
    assert all(e > 0 for e in errs)


def test_validate_passes_clean():
    res = run_validate()
    assert res.ok
    names = [c.name for c in res.checks]
    assert names == ["fourier-symbol", "trace-bridge sigma=0.5",
                     "trace-bridge sigma=1.0", "trace-bridge sigma=1.5",
                     "dense-equivalence"]
    text = res.summary()
    assert text.count("PASS") >= 5 and "validation PASSED" in text


def test_validate_catches_a_scaled_normalization_constant():
    # a 1% error in mu_sigma leaves a signal that does not vanish with y, so
    # the fitted bridge slope flattens where the genuine residual decays fastest
    res = run_validate(mu_scale=1.01)
    assert not res.ok
    failed = [c.name for c in res.checks if not c.passed]
    assert failed == ["trace-bridge sigma=0.5"]
    assert "validation FAILED" in res.summary()


def test_validate_catches_a_loosened_quadrature():
    res = run_validate(pv_tol=1e-2)
    failed = [c.name for c in res.checks if not c.passed]
    assert "fourier-symbol" in failed


# ---------------------------------------------------------------------------
# refinement studies


def small_linear_setup():
    return StudySetup(X=16.0, Y=16.0, T=0.5, base_i=16)


def test_convergence_linear_reference_is_spectral():
    rep = run_convergence(1.0, 1.0, PRACTICAL, levels=2, setup=small_linear_setup())
    assert rep.reference == "spectral"
    assert not rep.degenerate
    assert len(rep.rows) == 2
    assert rep.rows[0].order is None and rep.rows[1].order is not None
    assert all(r.err_trace > 0 and r.err_field is None for r in rep.rows)
    assert rep.rows[0].I == 16 and rep.rows[1].I == 32
    assert rep.rows[1].dx == pytest.approx(rep.rows[0].dx / 2)
    assert rep.target == pytest.approx(1.0)


def test_convergence_nonlinear_reference_is_fine_grid():
    setup = StudySetup(X=2.0, Y=2.0, T=0.25, base_i=8,
                       data=initial_data_preset("bump"))
    rep = run_convergence(0.5, 2.0, PRACTICAL, levels=2, setup=setup)
    assert rep.reference == "fine-grid"
    assert all(r.err_trace > 0 and r.err_field is not None for r in rep.rows)
    assert rep.rows[1].err_trace < rep.rows[0].err_trace


def test_convergence_zero_data_is_degenerate():
    setup = StudySetup(X=2.0, Y=2.0, T=0.25, base_i=8,
                       data=initial_data_preset("zero"))
    rep = run_convergence(0.5, 2.0, PRACTICAL, levels=2, setup=setup)
    assert rep.degenerate
    assert all(r.order is None for r in rep.rows)
    assert "degenerate=true" in rep.to_csv()


def test_convergence_guards():
    with pytest.raises(ConfigError):
        run_convergence(1.0, 1.0, PRACTICAL, levels=1)
    setup = StudySetup(X=2.0, Y=2.0, T=0.25, base_i=8,
                       data=initial_data_preset("bump"))
    with pytest.raises(ConfigError, match="gaussian"):
        run_convergence(1.0, 1.0, PRACTICAL, levels=2, setup=setup)
    bad_geometry = StudySetup(X=2.0, Y=1.7, T=0.25, base_i=8)
    with pytest.raises(ConfigError, match="meshable"):
        run_convergence(1.0, 1.0, PRACTICAL, levels=2, setup=bad_geometry)


def test_convergence_csv_is_deterministic_and_parseable():
    rep = run_convergence(1.0, 1.0, PRACTICAL, levels=2, setup=small_linear_setup())
    text = rep.to_csv()
    assert text == rep.to_csv()
    lines = text.strip().split("\n")
    assert lines[3] == "dx,dt,err_trace,err_field,order"
    assert len(lines) == 4 + len(rep.rows)
    first = lines[4].split(",")
    assert float(first[0]) == rep.rows[0].dx
    assert float(first[2]) == rep.rows[0].err_trace
    assert first[3] == "" and first[4] == ""


def test_loglog_svg_output(tmp_path):
    rep = run_convergence(1.0, 1.0, PRACTICAL, levels=2, setup=small_linear_setup())
    path = tmp_path / "study.svg"
    write_loglog_svg(rep, path)
    text = path.read_text()
    assert text.startswith("<svg ")
    assert text.count("<circle") == len(rep.rows)
    assert "stroke-dasharray" in text          # the slope guide line

    degenerate = ConvergenceReport(
        sigma=0.5, m=2.0, mode=PRACTICAL,
        params=SchemeParams(a=1.0, c=2, d=3, p=0.5),
        reference="fine-grid", target=0.5, rows=(), degenerate=True)
    path2 = tmp_path / "empty.svg"
    write_loglog_svg(degenerate, path2)
    assert "degenerate study" in path2.read_text()
