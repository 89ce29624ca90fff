"""
Invariant suite behind the verify command.
"""
import numpy as np

from src.processors.verification import CHECKS, run_invariant_suite


def test_suite_passes_at_small_size():
    table = run_invariant_suite((5,), seed=1)
    assert list(table.columns) == ["check", "N", "max_error", "tolerance", "passed"]
    assert len(table) == len(CHECKS)
    assert table["passed"].all(), table.loc[~table["passed"]].to_string()
    assert np.isfinite(table["max_error"]).all()


def test_suite_covers_each_size():
    table = run_invariant_suite((3, 7))
    assert sorted(table["N"].unique()) == [3, 7]
    assert table.groupby("N").size().tolist() == [len(CHECKS)] * 2
    assert len({name for name, _, _ in CHECKS}) == len(CHECKS)
