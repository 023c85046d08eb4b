"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
Every tolerance and runtime budget is asserted, not just reported.
"""

import json
from contextlib import contextmanager
from time import perf_counter

import numpy as np
import pytest
from click.testing import CliRunner

import oracles
from dyncarto.baselines import aum_ambiguous, datamaps_ambiguous
from dyncarto.cli import main as cli_main
from dyncarto.features import build_feature_vectors
from dyncarto.gmm import assign_clusters, fit_gmm
from dyncarto.heuristics import LexiconSet, load_wordlist, profile_dataset
from dyncarto.log import PH, H, write_log
from dyncarto.stats import compare_splits, mann_whitney_u
from helpers import random_log, three_group_log
from test_baselines import vectors_from
from test_gmm import agreement_up_to_permutation, planted_blobs
from test_stats import _fixture, _profiles


@contextmanager
def criterion(number, description, budget_s):
    start = perf_counter()
    try:
        yield
    except BaseException:
        print(f"\n[FAIL] criterion {number}: {description}")
        raise
    elapsed = perf_counter() - start
    status = "PASS" if elapsed < budget_s else "FAIL"
    print(f"\n[{status}] criterion {number}: {description} ({elapsed:.2f}s, budget {budget_s:g}s)")
    assert elapsed < budget_s, f"runtime {elapsed:.2f}s exceeded the {budget_s}s budget"


def test_criterion_1_feature_oracle_equivalence():
    with criterion(1, "feature oracle equivalence on 200x5x3 random logits, 1e-12", 5.0):
        log = random_log(seed=101, n_instances=200, epochs=5)
        vectors = {v.instance_id: v for v in build_feature_vectors(log)}
        assert len(vectors) == 200
        for meta in log.instances:
            gold_index = log.label_space.index(meta.gold_label)
            expected = []
            for setting in (PH, H):
                rows = log.logit_series(meta.instance_id, setting).tolist()
                expected.extend(oracles.setting_features_oracle(rows, gold_index))
            got = vectors[meta.instance_id].values
            assert len(got) == 8
            for g, e in zip(got, expected):
                assert abs(g - e) <= 1e-12


def test_criterion_2_em_correctness():
    with criterion(2, "EM: monotone log-likelihood, planted recovery, bitwise repeatability", 30.0):
        # (a) non-decreasing log-likelihood on 20 seeded random datasets
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            x = rng.normal(size=(60, 4))
            model = fit_gmm(x, k=3, seed=seed, n_init=3, max_iter=80)
            for traj in model.ll_trajectories:
                assert np.all(np.diff(np.array(traj)) >= -1e-8)

        # (b) planted 3-cluster recovery in 8-D
        x, truth, _ = planted_blobs(seed=2024, n_per=300, std=0.1, scale=5.0)
        model = fit_gmm(x, k=3, seed=0)
        assert agreement_up_to_permutation(assign_clusters(model, x), truth) >= 0.99

        # (c) bitwise-identical refit
        a = fit_gmm(x, k=3, seed=42)
        b = fit_gmm(x, k=3, seed=42)
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.means.tobytes() == b.means.tobytes()
        assert a.covariances.tobytes() == b.covariances.tobytes()
        assert a.log_likelihood == b.log_likelihood


def test_criterion_3_u_test_oracle():
    with criterion(3, "U statistic exact vs pair counting; p within 0.05 of exact permutation", 10.0):
        rng = np.random.default_rng(303)
        for _ in range(100):
            n1 = int(rng.integers(3, 8))
            n2 = int(rng.integers(3, 8))
            pool = rng.normal(size=n1 + n2)
            a, b = pool[:n1].tolist(), pool[n1:].tolist()
            res = mann_whitney_u(a, b)
            assert res.u_statistic == oracles.u_pair_counting(a, b)
            assert abs(res.p_value - oracles.exact_two_sided_p(a, b)) <= 0.05
        identical = rng.normal(size=6).tolist()
        assert mann_whitney_u(identical, list(identical)).p_value >= 0.99


def test_criterion_4_baseline_oracle():
    with criterion(4, "percentile selections match sort-based brute force on 50 random sets", 5.0):
        rng = np.random.default_rng(404)
        for _ in range(50):
            n = int(rng.integers(3, 80))
            var = rng.uniform(0, 0.5, size=n).tolist()
            margin = rng.normal(0, 3, size=n).tolist()
            vecs = vectors_from(var=var, margin=margin)
            ids = [v.instance_id for v in vecs]
            top_q = float(rng.uniform(5, 100))
            got = datamaps_ambiguous(vecs, top_q=top_q).selected
            assert list(got) == oracles.datamaps_selection_oracle(ids, var, top_q)
            lo = float(rng.uniform(0, 49))
            hi = float(rng.uniform(51, 100))
            got = aum_ambiguous(vecs, lower_q=lo, upper_q=hi).selected
            assert list(got) == oracles.aum_selection_oracle(ids, margin, lo, hi)


def test_criterion_5_end_to_end_characterization(tmp_path):
    with criterion(5, "three-group synthetic log characterized via the CLI", 30.0):
        log, group_of = three_group_log(seed=505, group_sizes=(100, 60, 40), accuracy_by_group=(0.9, 0.6, 0.3))
        log_path = tmp_path / "dynamics.jsonl"
        write_log(log, log_path)
        out = tmp_path / "run"
        runner = CliRunner()
        result = runner.invoke(cli_main, ["characterize", "--log", str(log_path), "--out", str(out), "--seed", "0"])
        assert result.exit_code == 0, result.output

        rows = (out / "assignment.csv").read_text().splitlines()[1:]
        difficulty_of = {r.split(",")[0]: r.split(",")[2] for r in rows}
        expected_difficulty = {0: "easy", 1: "ambiguous", 2: "hard"}
        for group in (0, 1, 2):
            members = [i for i, g in group_of.items() if g == group]
            hits = sum(1 for i in members if difficulty_of[i] == expected_difficulty[group])
            assert hits / len(members) >= 0.95

        # confidence ranking must be easy > ambiguous > hard
        clusters = json.loads((out / "clusters.json").read_text())
        conf = {c["difficulty"]: c["mean_confidence"] for c in clusters["clusters"]}
        assert conf["easy"] > conf["ambiguous"] > conf["hard"]

        result = runner.invoke(
            cli_main,
            ["report", "--log", str(log_path), "--out", str(tmp_path / "report"), "--assignment", str(out / "assignment.csv")],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads((tmp_path / "report" / "report.json").read_text())

        # hand recount from the assignment and the instance metadata
        n = len(log.instances)
        for difficulty in ("easy", "ambiguous", "hard"):
            members = [m for m in log.instances if difficulty_of[m.instance_id] == difficulty]
            split = doc["splits"][difficulty]
            assert split["count"] == len(members)
            assert split["fraction"] == len(members) / n
            by_class = {}
            for m in members:
                by_class[m.gold_label] = by_class.get(m.gold_label, 0) + 1
            assert {k: v for k, v in split["class_counts"].items() if v} == by_class
            expected_acc = sum(1 for m in members if m.reference_prediction == m.gold_label) / len(members)
            assert split["accuracy"]["overall"] == expected_acc


def test_criterion_6_heuristics_golden_set(tmp_path, dictionary_file, antonyms_file):
    with criterion(6, "curated heuristic fixtures match hand-derived values exactly", 1.0):
        from dyncarto.heuristics import load_antonyms
        from dyncarto.log import InstanceMeta

        lexicons = LexiconSet(
            antonyms=load_antonyms(antonyms_file),
            dictionary=load_wordlist(dictionary_file),  # deliberately lacks "teh" and "snw"
        )
        fixtures = [
            InstanceMeta("neg", "it gets it", "It doesn't get it.", "contradiction"),
            InstanceMeta("snow", "A brown dog plays in a deep pile of snow", "A brown dog plays in snow", "entailment"),
            InstanceMeta("anto", "The happy man is big", "The sad woman is small.", "contradiction"),
            InstanceMeta("misp", "Teh dog plays", "The dog plays in snw", "entailment"),
        ]
        got = profile_dataset(fixtures, lexicons)

        p = got["neg"]
        assert p.contains_negation is True
        assert p.word_overlap == 1 / 4
        assert p.antonym_score == 0.0
        assert p.length_mismatch == (3 - 5) / 8
        assert p.misspelled_ratio == 0.0

        p = got["snow"]
        assert p.word_overlap == 1.0
        assert p.antonym_score == 0.0
        assert p.length_mismatch == (10 - 6) / 16
        assert p.misspelled_ratio == 0.0
        assert p.contains_negation is False

        p = got["anto"]
        assert p.word_overlap == 2 / 5
        assert p.antonym_score == 2 / 5
        assert p.length_mismatch == 0.0
        assert p.misspelled_ratio == 0.0
        assert p.contains_negation is False

        p = got["misp"]
        assert p.word_overlap == 2 / 5
        assert p.misspelled_ratio == 2 / 8
        assert p.length_mismatch == (3 - 5) / 8
        assert p.contains_negation is False


def test_criterion_7_statistical_discrimination():
    with criterion(7, "+10 sigma cell flags ***; null fixtures >= 95% ns over 20 seeds", 10.0):
        rng = np.random.default_rng(707)
        ids, assignment, golds = _fixture(rng)
        shifted = {i for i in ids if assignment[i] == "ambiguous" and golds[i] == "con"}
        sigma = 1.0 / np.sqrt(12.0)  # std of U(0,1) measures
        report = compare_splits(_profiles(rng, ids, shifted, shift=10.0 * sigma), assignment, golds)
        cell = next(c for c in report.cells if c.difficulty == "ambiguous" and c.measure == "antonym_score")
        assert cell.code == "***"

        ns_cells = total = 0
        for seed in range(20):
            rng = np.random.default_rng(7000 + seed)
            ids, assignment, golds = _fixture(rng)
            report = compare_splits(_profiles(rng, ids), assignment, golds)
            ns_cells += sum(1 for c in report.cells if c.code == "ns")
            total += len(report.cells)
        assert ns_cells / total >= 0.95
