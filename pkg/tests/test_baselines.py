import json

import numpy as np
import pytest

import oracles
from dyncarto.baselines import aum_ambiguous, datamaps_ambiguous, percentile, write_selection
from dyncarto.features import FeatureVector

NAMES = ("conf_ph", "var_ph", "corr_ph", "aum_ph")


def vectors_from(var=None, margin=None):
    n = len(var) if var is not None else len(margin)
    var = var if var is not None else [0.0] * n
    margin = margin if margin is not None else [0.0] * n
    return [
        FeatureVector(f"i{k:03d}", (0.5, float(var[k]), 1.0, float(margin[k])), NAMES)
        for k in range(n)
    ]


class TestPercentile:
    def test_one_to_hundred(self):
        values = list(range(1, 101))
        assert percentile(values, 33) == 33

    def test_extremes(self):
        values = [5.0, 1.0, 9.0]
        assert percentile(values, 100) == 9.0
        assert percentile(values, 0) == 1.0

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(51)
        for _ in range(50):
            values = rng.normal(size=rng.integers(1, 40)).tolist()
            q = float(rng.uniform(0, 100))
            assert percentile(values, q) == oracles.percentile_oracle(values, q)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            percentile([], 50)

    def test_q_range_checked(self):
        with pytest.raises(ValueError):
            percentile([1.0], 101)


class TestDatamaps:
    def test_all_equal_selects_everything(self):
        sel = datamaps_ambiguous(vectors_from(var=[0.3] * 17), top_q=66)
        assert len(sel.selected) == 17

    def test_one_to_hundred_frozen_membership(self):
        values = [float(v) for v in range(1, 101)]
        sel = datamaps_ambiguous(vectors_from(var=values), top_q=66)
        assert len(sel.selected) == 66
        chosen_values = sorted(values[int(i[1:])] for i in sel.selected)
        assert chosen_values == [float(v) for v in range(35, 101)]
        assert sel.thresholds == (35.0,)

    def test_top_q_100_selects_all(self):
        rng = np.random.default_rng(52)
        sel = datamaps_ambiguous(vectors_from(var=rng.uniform(size=30)), top_q=100)
        assert len(sel.selected) == 30

    def test_monotone_in_top_q(self):
        rng = np.random.default_rng(53)
        vecs = vectors_from(var=rng.uniform(size=40))
        sizes = [len(datamaps_ambiguous(vecs, top_q=q).selected) for q in (10, 25, 50, 66, 80, 100)]
        assert sizes == sorted(sizes)

    def test_matches_sort_oracle_on_random_fixtures(self):
        rng = np.random.default_rng(54)
        for _ in range(50):
            values = rng.normal(size=int(rng.integers(3, 60))).tolist()
            top_q = float(rng.uniform(5, 100))
            vecs = vectors_from(var=values)
            sel = datamaps_ambiguous(vecs, top_q=top_q)
            ids = [v.instance_id for v in vecs]
            assert list(sel.selected) == oracles.datamaps_selection_oracle(ids, values, top_q)

    def test_order_invariance(self):
        rng = np.random.default_rng(55)
        vecs = vectors_from(var=rng.uniform(size=25))
        shuffled = list(vecs)
        rng.shuffle(shuffled)
        assert datamaps_ambiguous(vecs).selected == datamaps_ambiguous(shuffled).selected

    def test_empty_and_bad_q(self):
        with pytest.raises(ValueError):
            datamaps_ambiguous([])
        with pytest.raises(ValueError):
            datamaps_ambiguous(vectors_from(var=[1.0, 2.0]), top_q=0)


class TestAumBand:
    def test_one_to_hundred_band(self):
        values = [float(v) for v in range(1, 101)]
        sel = aum_ambiguous(vectors_from(margin=values))
        assert sel.thresholds == (33.0, 66.0)
        chosen = sorted(values[int(i[1:])] for i in sel.selected)
        assert chosen == [float(v) for v in range(33, 67)]
        assert len(sel.selected) == 34

    def test_all_equal_selected(self):
        sel = aum_ambiguous(vectors_from(margin=[2.5] * 9))
        assert len(sel.selected) == 9

    def test_full_band(self):
        rng = np.random.default_rng(56)
        sel = aum_ambiguous(vectors_from(margin=rng.normal(size=20)), lower_q=0, upper_q=100)
        assert len(sel.selected) == 20

    def test_band_widens_monotonically(self):
        rng = np.random.default_rng(57)
        vecs = vectors_from(margin=rng.normal(size=50))
        sizes = [
            len(aum_ambiguous(vecs, lower_q=lo, upper_q=hi).selected)
            for lo, hi in ((45, 55), (33, 66), (20, 80), (0, 100))
        ]
        assert sizes == sorted(sizes)

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(58)
        for _ in range(50):
            values = rng.normal(size=int(rng.integers(3, 60))).tolist()
            lo = float(rng.uniform(0, 49))
            hi = float(rng.uniform(51, 100))
            vecs = vectors_from(margin=values)
            sel = aum_ambiguous(vecs, lower_q=lo, upper_q=hi)
            ids = [v.instance_id for v in vecs]
            assert list(sel.selected) == oracles.aum_selection_oracle(ids, values, lo, hi)

    def test_bad_band_rejected(self):
        with pytest.raises(ValueError):
            aum_ambiguous(vectors_from(margin=[1.0, 2.0]), lower_q=66, upper_q=33)
        with pytest.raises(ValueError):
            aum_ambiguous([])


def test_write_selection(tmp_path):
    sel = datamaps_ambiguous(vectors_from(var=[0.1, 0.9, 0.5, 0.7]), top_q=50)
    ids_path = tmp_path / "sel.ids"
    sidecar = tmp_path / "sel.json"
    write_selection(sel, ids_path, sidecar)
    assert ids_path.read_text().splitlines() == list(sel.selected)
    doc = json.loads(sidecar.read_text())
    assert doc["method"] == "datamaps"
    assert doc["selected"] == len(sel.selected) and doc["total"] == 4
    assert doc["rule"]["feature"] == "var_ph"
