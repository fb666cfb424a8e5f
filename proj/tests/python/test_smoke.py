import math

import pytest

import arwlab


def test_constants():
    c = arwlab.constants(10000, 0.5, 1.0 / 10001)
    assert c["alpha_n"] == pytest.approx(151.74, rel=1e-4)
    assert c["a_n"] == pytest.approx(50.0)
    assert arwlab.constants(100, 0.5, 1.0)["q_prime"] is None
    assert arwlab.derive_p(1.0) == pytest.approx(0.5)
    assert arwlab.gumbel_cdf(0.0) == pytest.approx(math.exp(-1.0))
    assert arwlab.mu(4.0) == pytest.approx(5.3533e-4, rel=1e-4)


def test_exact_pmf():
    pmf = arwlab.exact_final_pmf(1, 0.5, 0.5)
    assert pmf == pytest.approx([1.0 / 3.0, 2.0 / 3.0])
    assert sum(arwlab.exact_final_pmf(6, 0.4, 0.2)) == pytest.approx(1.0)
    assert arwlab.binomial_tail(2, 0.5, 2) == pytest.approx(0.25)


def test_samplers_are_seeded():
    assert arwlab.run_to_hitting(50, 0.5, 0.1, 7) == arwlab.run_to_hitting(50, 0.5, 0.1, 7)
    s, steps, z = arwlab.run_to_hitting(50, 0.5, 0.1, 7)
    assert s + z == 50
    assert 0 <= arwlab.sample_stationary_S(20, 0.5, 0.3, 3) <= 20
    r = arwlab.run_fixed_energy(1000, 0.5, 400, 1, 10**7)
    assert not r["cap_hit"]
    assert 0 <= r["y0"] <= 400


def test_scenario_and_errors():
    out = arwlab.run_scenario(
        ["--scenario", "prop-stop", "--n", "2", "--p", "0.5", "--q", "0.5", "--reps", "20000", "--seed", "1"]
    )
    assert out["all_pass"]
    lines = out["records"].splitlines()
    assert lines[0] == arwlab.CSV_HEADER
    assert len(lines) == 1 + 3 * 20000
    with pytest.raises(arwlab.UsageError, match="q-mode"):
        arwlab.run_scenario(
            ["--scenario", "thm-gumbel", "--n", "2000", "--p", "0.5", "--q-mode", "exp:0.1", "--reps", "5", "--seed", "1"]
        )
