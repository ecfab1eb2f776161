"""Closed-form constants: kappa, the phase condition, binomial and stage params."""

import math

import pytest

from arwlab import (
    active_phase_condition,
    admissible_c,
    kappa,
    log_binomial_bound,
    stage_params,
)


def test_kappa_d1_value():
    k = kappa(1)
    assert k.value == pytest.approx(2 * math.exp(4.0), rel=1e-12)
    assert k.log == pytest.approx(math.log(2) + 4.0, rel=1e-12)


def test_kappa_d2_log():
    # ln 2 + 64 / (3/4)
    assert kappa(2).log == pytest.approx(math.log(2) + 64 / 0.75, rel=1e-12)
    assert kappa(2).log == pytest.approx(86.02648051389328, abs=1e-10)


def test_kappa_d3_overflows_value_not_log():
    k = kappa(3)
    assert math.isinf(k.value)
    assert k.log == pytest.approx(math.log(2) + 5832 / 0.875, rel=1e-12)


def test_kappa_rejects_bad_dimension():
    with pytest.raises(ValueError):
        kappa(0)


def test_phase_condition_reference_pair():
    # d=1, mu=1/2: lambda = 1e-5 satisfies, 2e-5 does not
    ok = active_phase_condition(1, 0.5, 1e-5)
    assert ok.satisfied
    assert ok.log_margin == pytest.approx(0.023594781085250927, abs=1e-14)
    bad = active_phase_condition(1, 0.5, 2e-5)
    assert not bad.satisfied
    assert bad.log_margin == pytest.approx(-0.32297880919472177, abs=1e-14)


def test_phase_condition_formula():
    d, mu, lam = 2, 0.3, 1e-40
    cond = active_phase_condition(d, mu, lam)
    lhs = kappa(d).log + mu * math.log(2 * d * lam)
    rhs = mu * math.log(mu) + (1 - mu) * math.log(1 - mu)
    assert cond.log_lhs == pytest.approx(lhs, rel=1e-12)
    assert cond.log_rhs == pytest.approx(rhs, rel=1e-12)
    assert cond.log_margin == pytest.approx(rhs - lhs, rel=1e-12)


def test_admissible_c_half_margin():
    c = admissible_c(1, 0.5, 1e-5)
    assert c == pytest.approx(0.023594781085250927 / 2, rel=1e-12)
    assert admissible_c(1, 0.5, 2e-5) is None
    assert admissible_c(1, 0.9, 1.0) is None


def test_binomial_bound_dominates_exact():
    for mu in (0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95):
        for m in (1, 2, 3, 7, 10, 100, 1000, 31623, 10**6):
            exact, bound = log_binomial_bound(m, mu)
            assert exact <= bound + 1e-12


def test_binomial_exact_matches_comb():
    for mu, m in [(0.3, 10), (0.5, 12), (0.8, 25)]:
        exact, _ = log_binomial_bound(m, mu)
        want = math.log(math.comb(m, math.ceil(mu * m)))
        assert exact == pytest.approx(want, rel=1e-12)


def test_binomial_bound_validation():
    with pytest.raises(ValueError):
        log_binomial_bound(0, 0.5)
    with pytest.raises(ValueError):
        log_binomial_bound(10**6 + 1, 0.5)
    with pytest.raises(ValueError):
        log_binomial_bound(10, 1.0)


def test_stage_params_reference_values():
    p = stage_params(0.24, 1, 0.5, 1.0)
    # the log term binds: 0.24/(72 ln 2) < 0.24/48 < 1/3
    assert p.a == pytest.approx(0.9 * 0.24 / (72 * math.log(2)), rel=1e-12)
    assert p.a == pytest.approx(0.00432808512266689, abs=1e-15)
    assert p.epsilon == pytest.approx(0.9 * 0.1 * p.a / 4, rel=1e-12)
    assert p.epsilon == pytest.approx(9.738191526000504e-05, abs=1e-17)


def test_stage_params_cap_at_one_third():
    # huge c: both fractions exceed 1/3, so a = 0.9/3
    p = stage_params(1e6, 1, 0.5, 1.0)
    assert p.a == pytest.approx(0.3, rel=1e-12)
    assert p.epsilon == pytest.approx(0.9 * 0.1 * 0.3 / 4, rel=1e-12)


def test_stage_params_density_term_binds():
    # tiny mu pulls the 96-term up; lambda large kills the log term
    p = stage_params(0.5, 1, 0.9, 100.0)
    assert p.a == pytest.approx(0.9 * 0.5 / (96 * 0.9), rel=1e-12)


def test_stage_params_validation():
    with pytest.raises(ValueError):
        stage_params(0.0, 1, 0.5, 1.0)
    with pytest.raises(ValueError):
        stage_params(0.2, 1, 1.5, 1.0)
    with pytest.raises(ValueError):
        stage_params(0.2, 1, 0.5, 0.0)
    with pytest.raises(ValueError):
        stage_params(0.2, 1, 0.5, 1.0, beta=0.0)
