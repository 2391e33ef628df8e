import pytest

from models import ConfigError
from services import validation
from services.validation import Check, CheckResult


def test_every_group_has_checks():
    groups = {item.group for item in validation.checks()}
    assert groups == set(validation.GROUPS)


def test_only_filters_to_one_group():
    selected = validation.checks("symplectic")
    assert selected and all(item.group == "symplectic" for item in selected)
    assert {item.name for item in selected} >= {"monodromy_symplectic"}


def test_unknown_group_is_a_config_error():
    with pytest.raises(ConfigError) as info:
        validation.checks("astrology")
    assert info.value.key == "only"
    assert info.value.exit_code == 2


def test_check_decorator_rejects_unknown_group():
    with pytest.raises(ValueError):
        validation.check("astrology")


def test_run_checks_turns_exceptions_into_failures(monkeypatch):
    def broken():
        raise RuntimeError("boom")

    monkeypatch.setattr(validation, "_registry", [
        Check("energy", "fine", lambda: (True, "ok")),
        Check("energy", "broken", broken),
        Check("potential", "other", lambda: (True, "ok")),
    ])
    results = validation.run_checks("energy")
    assert [(r.name, r.passed) for r in results] == [("fine", True), ("broken", False)]
    assert results[1].detail == "RuntimeError: boom"


def test_format_table():
    table = validation.format_table([CheckResult("energy", "fine", True, "ok"),
                                     CheckResult("energy", "bad", False, "drift 1e-3")])
    lines = table.splitlines()
    assert lines[0].split() == ["GROUP", "CHECK", "RESULT", "DETAIL"]
    assert lines[2].split()[:3] == ["energy", "fine", "PASS"]
    assert lines[3].endswith("FAIL   drift 1e-3")
    assert lines[-1] == "1 passed, 1 failed"


def test_symplectic_group_passes():
    results = validation.run_checks("symplectic")
    assert all(r.passed for r in results), validation.format_table(results)


def test_reference_config_applies_overrides():
    config = validation.reference_config("two_slit", n_trajectories=3)
    assert config.n_trajectories == 3
    assert config.name == "two_slit"


@pytest.mark.slow
def test_equivariance_group_passes_without_bias():
    results = {r.name: r for r in validation.run_checks("equivariance")}
    assert results["free_gaussian_ks"].passed, results["free_gaussian_ks"].detail
    assert results["moving_packet_ks"].passed, results["moving_packet_ks"].detail
    assert all(r.passed for r in results.values())
