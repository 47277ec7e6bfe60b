from plapsys.checks import (
    CheckResult,
    exponent_identities,
    gradient_checks,
    homogeneity_check,
    poisson_oracle,
    run_battery,
)
from plapsys.energy import CouplingParams


def test_battery_passes_on_defaults():
    results = run_battery()
    assert [r.name for r in results] == [
        "exponent identities", "gradient finite differences", "Poisson O(h^2) ratio", "p-homogeneity of S"]
    assert all(r.passed for r in results), [r.line() for r in results]


def test_identities_exact():
    res = exponent_identities()
    assert res.passed and res.measured == 0


def test_huge_eps_discriminates():
    # the gradients stay exact under any smoothing, the solution map does not
    params = CouplingParams(p=1.5, A=1.0, r=6.0, theta=0.3, eps=10.0)
    assert gradient_checks(params).passed
    assert not homogeneity_check(10.0).passed
    # the p = 2 energy only shifts by a constant, so the Poisson oracle cannot see eps
    assert poisson_oracle(10.0).passed


def test_line_format():
    line = CheckResult("x", False, 0.5, "<= 1").line()
    assert line.startswith("FAIL") and "measured=0.5" in line and "required <= 1" in line
