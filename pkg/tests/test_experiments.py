import json

import pytest

from ga_wqed.errors import InvalidConfigurationError
from ga_wqed.experiments import (
    CASES,
    CaseReport,
    Check,
    effective_model_error,
    oracle_configs,
    run_case,
)


def test_report_fails_on_budget_overrun():
    ok = Check("x", 0.0, 0.0, 1.0, True)
    rep = CaseReport("demo", 1, [ok], runtime=2.0, budget=1.0)
    assert not rep.passed
    assert [c.name for c in rep.failures()] == ["runtime"]
    assert "FAIL" in rep.summary_line()


def test_report_serialises():
    rep = run_case("dark_amplitude")
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["passed"] and d["criterion"] == 3
    assert d["checks"][0]["expected"] == pytest.approx((1 / 1.1) ** 2)


def test_overrides_replace_config():
    rep = run_case("dark_amplitude", {"gamma_tau": 0.2})
    assert rep.checks[0].expected == pytest.approx((1 / 1.2) ** 2)
    assert rep.passed
    assert CASES["dark_amplitude"].config["gamma_tau"] == 0.1


def test_unknown_case():
    with pytest.raises(InvalidConfigurationError):
        run_case("no_such_case")


def test_oracle_configs_are_reproducible_and_valid():
    a, b = oracle_configs(7, 5), oracle_configs(7, 5)
    assert a == b
    for lay in a:
        assert 1 <= lay.n_legs <= 5
        assert 0.002 <= lay.gamma_single <= 0.02


def test_effective_model_error_shrinks_linearly_with_coupling():
    errs = [effective_model_error(6, 6, "uniform", 0.5, eps) for eps in (0.01, 0.001)]
    assert errs[1] < 0.02
    assert errs[0] / errs[1] == pytest.approx(10, rel=0.4)


def test_alternating_reduction_is_accurate():
    assert effective_model_error(4, 6, "alternating", 0.5, 0.01) < 0.05
