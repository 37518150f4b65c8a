import numpy as np
import pytest

from pmeanlab import fields
from pmeanlab.compare import (
    compare_on_field,
    continuity_contrast,
    monotonicity_search,
    replay_pair,
)
from pmeanlab.pmean import mpr_mean_samples


def test_continuity_contrast():
    row = continuity_contrast(200, 2)
    assert row.exact == pytest.approx(2 / 202)
    assert abs(row.p_mean - row.exact) <= 1e-4
    assert row.min_max_mean == pytest.approx(0.5, abs=1e-12)


def test_contrast_small_n_is_exact():
    row = continuity_contrast(4, 3)
    assert row.p_mean == pytest.approx(3 / 7, rel=1e-12)


def test_variational_mean_has_no_violations():
    for p in (1.0, 1.5, 4.0):
        res = monotonicity_search("pmean", p, pairs=2000, seed=1)
        assert res.violations == 0 and res.witnesses == ()


def test_explicit_mean_below_two_has_replayable_witnesses():
    res = monotonicity_search("mpr", 1.5, pairs=2000, seed=0, samples=32)
    assert res.violations > 0
    w = res.witnesses[0]
    u, v = replay_pair(0, w.index, 2000, 32)
    assert np.array_equal(u, w.u) and np.array_equal(v, w.v)
    assert np.all(u <= v)
    weights = np.full(32, 1 / 32)
    mu, mv = mpr_mean_samples(np.vstack([u, v]), weights, 1.5, 2)
    assert mu == w.mean_u and mv == w.mean_v and mu > mv


def test_search_is_deterministic():
    a = monotonicity_search("mpr", 1.5, pairs=500, seed=7)
    b = monotonicity_search("mpr", 1.5, pairs=500, seed=7)
    assert a.to_dict() == b.to_dict()


def test_unknown_mean():
    with pytest.raises(KeyError):
        monotonicity_search("nope", 2.0, pairs=10)


def test_compare_on_field_linear():
    out = compare_on_field(fields.linear(2), np.zeros(2), 0.5, 3.0)
    assert set(out) == {"pmean", "mpr", "hr1", "hr2"}
    assert all(abs(v) < 1e-10 for v in out.values())
    out = compare_on_field(fields.linear(2), np.zeros(2), 0.5, np.inf)
    assert set(out) == {"pmean", "mpr"}
