import math
import os
from pathlib import Path

import pytest

import cohortsurv as cs

DATA = Path(os.environ.get("COHORTSURV_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))
GOLDEN = DATA / "calibrated_cohort.csv"


def test_golden_cohort_matches_generator():
    cohort = cs.read_cohort(str(GOLDEN))
    assert len(cohort) == 132
    assert cohort == cs.generate_calibrated()
    assert cs.parse_cohort(cohort.to_csv()) == cohort


def test_baseline_table_totals():
    t = cs.baseline_table(cs.generate_calibrated())
    assert (t["n"], t["deaths"], t["death_pct"]) == (132, 89, 67.4)
    stark = next(s for s in t["strata"] if s["level"] == "Stark")
    assert (stark["population"], stark["deaths"]) == (26, 13)


def test_km_fit_hand_example():
    curve = cs.km_fit([1, 1, 1], [2, 3, 4], [1, 0, 1])
    assert curve["time"] == [2.0, 4.0]
    assert curve["survival"] == [2.0 / 3.0, 0.0]
    assert math.isnan(curve["ci_lower"][1])


def test_log_rank_identical_groups():
    g = ([1, 1, 1], [1, 2, 3], [1, 1, 0])
    r = cs.log_rank([g, g])
    assert r["chi_square"] == pytest.approx(0.0, abs=1e-12)
    assert r["df"] == 1


def test_cox_alternating_example():
    fit = cs.cox_fit([[1], [0], [1], [0]], ["x"], [1, 1, 1, 1], [1, 2, 3, 4], [1, 1, 1, 1])
    assert fit["converged"]
    assert fit["coefficients"][0] == pytest.approx(0.9406136421, abs=1e-9)
    assert fit["table"][0]["ratio"] == math.exp(fit["coefficients"][0])


def test_cox_table_has_fourteen_terms():
    rows = cs.cox_table(cs.generate_calibrated())
    assert [r["term"] for r in rows][:2] == ["age_dec", "male"]
    assert len(rows) == 14


def test_logit_two_by_two_and_separation():
    x = [[1]] * 15 + [[0]] * 12
    y = [1] * 10 + [0] * 5 + [1] * 4 + [0] * 8
    fit = cs.logit_fit(x, ["x"], y)
    assert fit["coefficients"][1] == pytest.approx(math.log(4.0), abs=1e-6)
    with pytest.raises(cs.ModelError, match="Tyrell"):
        cs.logit_fit([[1]] * 4 + [[0]] * 6, ["Tyrell"], [1] * 4 + [0, 1, 0, 1, 0, 0])


def test_errors_are_typed():
    with pytest.raises(cs.DataError, match="row 2"):
        cs.parse_cohort(
            "id,name,age_years,sex,allegiance,occupation,region,entry_episode,exit_episode,event,cause\n"
            "a,A,20,male,Dothraki,Other,Essos,1,5,0,\n"
        )
    assert issubclass(cs.ModelError, cs.Error)


def test_cli_entry_point():
    code, out, _ = cs.run([])
    assert code == 2 and "table1" in out
    code, out, err = cs.run(["table1", "--data", str(GOLDEN)])
    assert code == 0, err
    assert "| Total | | 89 (67.4) |" in out
