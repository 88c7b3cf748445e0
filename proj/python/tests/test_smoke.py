import math

import pytest

import wavelab


def test_profile_zeros_decrease():
    z = wavelab.profile_zeros()
    assert len(z) >= 6
    assert all(a > b for a, b in zip(z, z[1:]))
    assert z[0] == pytest.approx(0.105867325256042, rel=1e-9)


def test_stationary_state_has_k_zeros():
    q = wavelab.stationary(1, r_max=40.0, n=4097)
    vals = q["q"][1:]
    changes = sum(1 for a, b in zip(vals, vals[1:]) if (a > 0) != (b > 0))
    assert changes == 1
    assert q["nodal_radii"][1] == pytest.approx(10.75, rel=1e-3)
    assert q["residual"] < 1e-3


def test_eigenvalue_counts():
    assert len(wavelab.eigenvalues(0)) == 1
    e = wavelab.eigenvalues(1)
    assert len(e) == 2
    assert e[0] == pytest.approx(1.51952916, rel=1e-7)


def test_scenarios_and_records(tmp_path):
    assert "ground-dichotomy" in wavelab.scenarios()
    rec = wavelab.run_scenario("spectrum-table", k_max=0, zero_potential=True)
    assert rec["matched"] and rec["outcome"]["counts"] == [0]
    assert rec["format_version"] == wavelab.FORMAT_VERSION
    rec = wavelab.run_scenario("spectrum-table", out_root=tmp_path, k_max=1)
    assert rec["outcome"]["counts"] == [1, 2]
    assert any(p.endswith("record.json") for p in rec["artifacts"])


def test_bad_parameters_raise():
    with pytest.raises(wavelab.WavelabError):
        wavelab.scenario_defaults("no-such-scenario")
    with pytest.raises(wavelab.WavelabError):
        wavelab.run_scenario("ground-dichotomy", bogus=1)


def test_evolve_ground_state_blows_up():
    out = wavelab.evolve(
        """
k = 0
[grid]
r_max = 50.0
n = 4097
[evolve]
t_end = 40.0
[perturbation]
alpha = 0.02
"""
    )
    assert out["label"] == "PositiveBlowUp"
    assert out["positivity"]["ok"]
    assert out["series_header"][:3] == ["t", "sup_u", "min_u"]
    assert math.isfinite(out["series"][0][3])


def test_single_criterion():
    (r,) = wavelab.verify([12])
    assert r["id"] == 12 and r["passed"]
