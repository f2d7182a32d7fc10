import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.metrics import f1_score, recall_score

from cefusion.exceptions import DataError
from cefusion.metrics import confusion, evaluate, macro_f1, normalize_metric, per_class_f1, uar
from oracles import macro_f1_brute, uar_brute

# 20 frames, 3 classes; matrix tallied by hand
TRUTH20 = [0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2]
PRED20 = [0, 0, 0, 0, 0, 1, 2, 1, 1, 1, 1, 0, 2, 2, 2, 2, 2, 1, 1, 0]
TALLY20 = [[5, 1, 1], [1, 4, 1], [1, 2, 4]]


class TestConfusion:
    def test_identity(self):
        cm = confusion([0, 1, 2], [0, 1, 2], 3)
        np.testing.assert_array_equal(cm.counts, np.eye(3))

    def test_off_diagonal(self):
        assert confusion([0, 0], [1, 1], 2).counts[0, 1] == 2

    def test_hand_tally(self):
        cm = confusion(TRUTH20, PRED20, 3)
        np.testing.assert_array_equal(cm.counts, TALLY20)
        assert cm.total == 20

    def test_errors(self):
        with pytest.raises(DataError):
            confusion([0, 1], [0], 2)
        with pytest.raises(DataError):
            confusion([0, 3], [0, 1], 3)
        with pytest.raises(DataError):
            confusion([0, -1], [0, 1], 3)

    def test_shards_add(self):
        a = confusion(TRUTH20[:10], PRED20[:10], 3)
        b = confusion(TRUTH20[10:], PRED20[10:], 3)
        np.testing.assert_array_equal((a + b).counts, TALLY20)


class TestMacroF1:
    def test_perfect(self):
        assert macro_f1(confusion([0, 1, 2, 2], [0, 1, 2, 2], 3)) == 1.0

    def test_one_class_predictor(self):
        cm = confusion([0] * 10 + [1] * 10, [0] * 20, 2)
        np.testing.assert_allclose(per_class_f1(cm), [2 / 3, 0])
        assert macro_f1(cm) == 1 / 3

    def test_absent_class_counts_as_zero(self):
        cm = confusion([0, 1], [0, 1], 3)
        assert per_class_f1(cm)[2] == 0.0
        assert macro_f1(cm) == pytest.approx(2 / 3)
        assert macro_f1(cm, absent="exclude") == 1.0

    def test_empty(self):
        with pytest.raises(DataError):
            macro_f1(confusion([], [], 3))

    def test_hand_tally(self):
        assert macro_f1(confusion(TRUTH20, PRED20, 3)) == pytest.approx(macro_f1_brute(TRUTH20, PRED20, 3), abs=1e-12)


class TestUAR:
    def test_perfect(self):
        assert uar(confusion([0, 1, 1], [0, 1, 1], 2)) == 1.0

    def test_mean_of_recalls(self):
        truth = [0] * 10 + [1] * 10
        pred = [0] * 8 + [1] * 2 + [1] * 4 + [0] * 6
        assert uar(confusion(truth, pred, 2)) == pytest.approx(0.6, abs=1e-15)

    def test_uniform_random_predictions(self):
        r = np.random.default_rng(5)
        k = 7
        cm = confusion(r.integers(0, k, 10_000), r.integers(0, k, 10_000), k)
        assert abs(uar(cm) - 1 / k) <= 0.02


@given(st.integers(1, 8), st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), min_size=1, max_size=60))
def test_matches_brute_force_and_bounds(k, pairs):
    truth = [t % k for t, _ in pairs]
    pred = [p % k for _, p in pairs]
    cm = confusion(truth, pred, k)
    assert abs(macro_f1(cm) - macro_f1_brute(truth, pred, k)) <= 1e-12
    assert abs(uar(cm) - uar_brute(truth, pred, k)) <= 1e-12
    assert 0 <= macro_f1(cm) <= 1 and 0 <= uar(cm) <= 1


@given(st.permutations(range(5)), st.integers(0, 2**32 - 1))
def test_permutation_invariance(perm, seed):
    r = np.random.default_rng(seed)
    truth, pred = r.integers(0, 5, 40), r.integers(0, 5, 40)
    perm = np.array(perm)
    a = confusion(truth, pred, 5)
    b = confusion(perm[truth], perm[pred], 5)
    assert macro_f1(a) == pytest.approx(macro_f1(b), abs=1e-12)
    assert uar(a) == pytest.approx(uar(b), abs=1e-12)


def test_agrees_with_sklearn(rng):
    truth, pred = rng.integers(0, 7, 500), rng.integers(0, 7, 500)
    cm = confusion(truth, pred, 7)
    labels = list(range(7))
    assert macro_f1(cm) == pytest.approx(f1_score(truth, pred, average="macro", labels=labels, zero_division=0))
    assert uar(cm) == pytest.approx(recall_score(truth, pred, average="macro", labels=labels, zero_division=0))


def test_report():
    rep = evaluate(TRUTH20, PRED20, ("a", "b", "c"))
    assert rep.macro_f1 == pytest.approx(np.mean(rep.per_class_f1), abs=1e-12)
    assert rep.uar == pytest.approx(np.mean(rep.per_class_recall), abs=1e-12)
    assert rep.frames_evaluated == 20
    d = rep.to_dict()
    assert d["confusion"]["counts"] == TALLY20
    perfect = evaluate([0, 1], [0, 1], ("a", "b"))
    assert perfect.summary().startswith("F1 = 100.00  UAR = 100.00")


def test_metric_names():
    assert normalize_metric("f1") == "macro_f1"
    assert normalize_metric("UAR") == "uar"
    with pytest.raises(ValueError):
        normalize_metric("accuracy")
