import numpy as np
import pytest

from conftest import brute_force_ranks
from dupkit.errors import DimensionMismatchError, InvariantError
from dupkit.evaluation import (
    ModalityBundle,
    SimilarityMatrix,
    fuse_similarity,
    query_ranks,
    ranking_loss,
    retrieval_metrics,
)


def make_bundle(dots, weights, dim=4):
    """Bundle whose per-modality dot products equal the given values."""
    text, video, w = {}, {}, {}
    for i, (d, wt) in enumerate(zip(dots, weights)):
        name = f"m{i}"
        text[name] = np.array([d] + [0.0] * (dim - 1))
        video[name] = np.array([1.0] + [0.0] * (dim - 1))
        w[name] = wt
    return ModalityBundle(text=text, video=video, weights=w)


class TestFusion:
    def test_one_hot_weights(self):
        bundle = make_bundle([0.8, 0.4], [1.0, 0.0])
        assert fuse_similarity(bundle) == pytest.approx(0.8)

    def test_hand_sum(self):
        bundle = make_bundle([0.8, 0.4], [0.5, 0.5])
        assert fuse_similarity(bundle) == pytest.approx(0.6)

    def test_all_zero_weights(self):
        bundle = make_bundle([0.8, 0.4, 0.1], [0.0, 0.0, 0.0])
        assert fuse_similarity(bundle) == 0.0

    def test_linear_in_weights(self, rng):
        dots = rng.normal(size=3).tolist()
        w1 = rng.uniform(size=3).tolist()
        w2 = rng.uniform(size=3).tolist()
        f1 = fuse_similarity(make_bundle(dots, w1))
        f2 = fuse_similarity(make_bundle(dots, w2))
        combined = fuse_similarity(make_bundle(dots, [a + b for a, b in zip(w1, w2)]))
        assert combined == pytest.approx(f1 + f2)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            ModalityBundle(
                text={"m": np.ones(3)}, video={"m": np.ones(4)}, weights={"m": 1.0}
            )


class TestRankingLoss:
    def test_separated_batch_zero_loss(self):
        s = np.array([[1.0, 0.5], [0.2, 0.9]])
        assert ranking_loss(s, 0.05) == 0.0

    def test_all_equal_entries(self):
        for b in (2, 3, 5):
            s = np.full((b, b), 0.4)
            assert ranking_loss(s, 0.05) == pytest.approx(2 * (b - 1) * 0.05)
        assert ranking_loss(np.full((2, 2), 0.4), 0.05) == pytest.approx(0.1)

    def test_hand_computed(self):
        s = np.array([[0.5, 0.6], [0.4, 0.3]])
        # hinge terms: 0.15 + 0 + 0.15 + 0.35 over B=2
        assert ranking_loss(s, 0.05) == pytest.approx(0.325)

    def test_non_negative(self, rng):
        for _ in range(50):
            b = int(rng.integers(2, 10))
            assert ranking_loss(rng.normal(size=(b, b)), 0.05) >= 0.0

    def test_matches_double_loop_oracle(self, rng):
        for _ in range(100):
            b = int(rng.integers(2, 17))
            s = rng.normal(size=(b, b))
            m = float(rng.uniform(0, 0.2))
            expected = 0.0
            for i in range(b):
                for j in range(b):
                    if j == i:
                        continue
                    expected += max(0.0, s[i, j] - s[i, i] + m)
                    expected += max(0.0, s[j, i] - s[i, i] + m)
            expected /= b
            assert ranking_loss(s, m) == pytest.approx(expected, abs=1e-9)

    def test_zero_iff_margin_satisfied(self):
        m = 0.1
        s = np.array([[1.0, 0.85], [0.85, 1.0]])  # gap 0.15 > m
        assert ranking_loss(s, m) == 0.0
        s2 = np.array([[1.0, 0.95], [0.95, 1.0]])  # gap 0.05 < m
        assert ranking_loss(s2, m) > 0.0

    def test_non_square_rejected(self):
        with pytest.raises(InvariantError):
            ranking_loss(np.ones((2, 3)), 0.05)


class TestRetrievalMetrics:
    def test_identity_matrix(self):
        m = SimilarityMatrix(values=np.eye(10))
        metrics = retrieval_metrics(m, [1, 5, 10])
        assert metrics["r_at"][1] == 100.0
        assert metrics["mnr"] == 1.0
        assert metrics["mdr"] == 1.0

    def test_known_ranks(self):
        # craft a matrix with ranks {1, 2, 10} over a 10-item gallery
        values = np.zeros((3, 10))
        values[0, 0] = 1.0  # rank 1
        values[1, 1] = 0.5
        values[1, 5] = 0.9  # one item above -> rank 2
        values[2, 2] = -1.0  # below the 7 zero ties at smaller idx -> rank 10
        m = SimilarityMatrix(values=values, ground_truth={0: 0, 1: 1, 2: 2})
        assert list(query_ranks(m)) == [1, 2, 10]
        metrics = retrieval_metrics(m, [1, 5, 10])
        assert metrics["r_at"][1] == pytest.approx(100 / 3)
        assert metrics["r_at"][5] == pytest.approx(200 / 3)
        assert metrics["r_at"][10] == 100.0
        assert metrics["mnr"] == pytest.approx(13 / 3)
        assert metrics["mdr"] == 2.0

    def test_matches_sort_oracle(self, rng):
        for _ in range(30):
            nq = int(rng.integers(1, 20))
            ng = int(rng.integers(nq, 50))
            values = rng.normal(size=(nq, ng))
            gt = {i: int(rng.integers(0, ng)) for i in range(nq)}
            m = SimilarityMatrix(values=values, ground_truth=gt)
            assert list(query_ranks(m)) == brute_force_ranks(values, gt)

    def test_monotone_transform_invariance(self, rng):
        values = rng.normal(size=(10, 30))
        m1 = SimilarityMatrix(values=values.copy())
        m2 = SimilarityMatrix(values=np.exp(values))  # strictly increasing
        assert retrieval_metrics(m1, [1, 5]) == retrieval_metrics(m2, [1, 5])

    def test_tie_break_smaller_gallery_index(self):
        values = np.array([[0.5, 0.5, 0.5]])
        assert query_ranks(SimilarityMatrix(values=values, ground_truth={0: 0}))[0] == 1
        assert query_ranks(SimilarityMatrix(values=values, ground_truth={0: 2}))[0] == 3

    def test_k_beyond_gallery_rejected(self):
        with pytest.raises(InvariantError):
            retrieval_metrics(SimilarityMatrix(values=np.eye(3)), [5])

    def test_random_baseline_thousand_gallery(self, rng):
        mdrs, r10s = [], []
        for _ in range(20):
            m = SimilarityMatrix(values=rng.uniform(size=(1000, 1000)))
            metrics = retrieval_metrics(m, [10])
            mdrs.append(metrics["mdr"])
            r10s.append(metrics["r_at"][10])
        assert 485 <= np.mean(mdrs) <= 515
        assert 0.7 <= np.mean(r10s) <= 1.3

    def test_lower_median_even_count(self):
        values = np.zeros((2, 4))
        values[0, 0] = 1.0  # rank 1
        values[1, 1] = -1.0  # rank 4
        m = SimilarityMatrix(values=values, ground_truth={0: 0, 1: 1})
        assert retrieval_metrics(m, [1])["mdr"] == 1.0  # lower of {1, 4}
