"""Claim sweep behavior: results, fault injection, config validation."""

import pytest

from shallowprep.claims import CLAIM_IDS, SweepConfig, all_pass, run_claims

TINY = SweepConfig(m_values=(1, 2, 3, 4), k_max=3, enumeration_budget=8)


def test_tiny_grid_all_pass():
    verdicts = run_claims(TINY)
    assert verdicts
    assert all_pass(verdicts)
    assert {v.claim for v in verdicts} == set(CLAIM_IDS)


def test_fault_injection_breaks_only_normalizer_rows():
    cfg = SweepConfig(m_values=(1, 2, 3, 4), k_max=3, enumeration_budget=8,
                      fault="lambda-off-by-one")
    verdicts = run_claims(cfg)
    assert not all_pass(verdicts)
    for v in verdicts:
        if v.claim == "normalizer-bounds":
            assert not v.passed, v.params
        else:
            assert v.passed, (v.claim, v.params)


def test_sweep_config_validation():
    with pytest.raises(ValueError, match="empty"):
        SweepConfig(m_values=())
    with pytest.raises(ValueError, match="positive"):
        SweepConfig(m_values=(0, 1))
    with pytest.raises(ValueError, match="k_max"):
        SweepConfig(k_max=0)
    with pytest.raises(ValueError, match="worker"):
        SweepConfig(workers=0)
    with pytest.raises(ValueError, match="fault"):
        SweepConfig(fault="no-such-fault")


def test_parallel_run_matches_serial_order():
    serial = run_claims(TINY)
    cfg = SweepConfig(m_values=TINY.m_values, k_max=TINY.k_max,
                      enumeration_budget=TINY.enumeration_budget, workers=2)
    parallel = run_claims(cfg)
    assert [v.as_dict(include_seconds=False) for v in serial] == [
        v.as_dict(include_seconds=False) for v in parallel
    ]


def test_verdict_rows_carry_timings_and_schema():
    verdicts = run_claims(SweepConfig(m_values=(2,), k_max=2, enumeration_budget=4))
    for v in verdicts:
        row = v.as_dict()
        assert set(row) == {"claim", "params", "lhs", "rhs", "passed", "seconds"}
        assert row["seconds"] >= 0.0
        assert set(row["params"]) <= {"m", "k", "j", "ell", "k_star"}
    assert "seconds" not in verdicts[0].as_dict(include_seconds=False)


def test_rows_sorted_by_claim_then_params():
    verdicts = run_claims(TINY)
    keys = [(CLAIM_IDS.index(v.claim), sorted(v.params.items())) for v in verdicts]
    assert keys == sorted(keys)
