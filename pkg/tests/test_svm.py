import math

import numpy as np
import pytest

from glyphspectra.errors import ContractError, ParameterError, TrainingError
from glyphspectra.svm import (BinarySvmModel, KernelParams, default_grid,
                              grid_search, kernel_matrix, load_ovo,
                              ovo_from_dict, ovo_to_dict, predict,
                              predict_batch, rbf_kernel, save_ovo,
                              train_binary, train_ovo)


def qp_oracle_objective(xs, ys, params, ridge=1e-10):
    """Dual objective of the reference solution from a generic QP solver."""
    import cvxopt
    cvxopt.solvers.options["show_progress"] = False
    m = len(ys)
    K = kernel_matrix(xs, xs, params.gamma)
    Q = (ys[:, None] * ys[None, :]) * K + ridge * np.eye(m)
    P = cvxopt.matrix(Q)
    q = cvxopt.matrix(-np.ones(m))
    G = cvxopt.matrix(np.vstack([-np.eye(m), np.eye(m)]))
    h = cvxopt.matrix(np.hstack([np.zeros(m), params.C * np.ones(m)]))
    A = cvxopt.matrix(ys.reshape(1, -1))
    b = cvxopt.matrix(np.zeros(1))
    sol = cvxopt.solvers.qp(P, q, G, h, A, b)
    alpha = np.array(sol["x"]).ravel()
    return float(alpha.sum() - 0.5 * (alpha * ys) @ K @ (alpha * ys))


def gaussian_blobs(rng, n_classes=3, per_class=15, spread=0.4):
    xs, ys = [], []
    centers = rng.normal(size=(n_classes, 3)) * 4
    for c in range(n_classes):
        xs.append(centers[c] + rng.normal(size=(per_class, 3)) * spread)
        ys.extend([c] * per_class)
    return np.vstack(xs), np.array(ys)


class TestKernel:
    def test_same_point(self):
        assert rbf_kernel([1.0, 2.0], [1.0, 2.0], 3.0) == 1.0

    def test_unit_distance(self):
        assert rbf_kernel([0.0], [1.0], 1.0) == pytest.approx(math.exp(-1))

    def test_half_gamma(self):
        assert rbf_kernel([0.0, 0.0], [1.0, 0.0], 0.5) == pytest.approx(
            math.exp(-0.5))

    def test_dimension_mismatch(self):
        with pytest.raises(ContractError):
            rbf_kernel([0.0], [1.0, 2.0], 1.0)

    def test_matrix_properties(self):
        rng = np.random.default_rng(0)
        xs = rng.normal(size=(12, 4))
        K = kernel_matrix(xs, xs, 0.7)
        assert np.allclose(K, K.T)
        assert np.allclose(np.diag(K), 1.0)
        assert (K > 0).all() and (K <= 1.0).all()
        # positive semidefinite
        assert np.linalg.eigvalsh(K).min() > -1e-10

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(1)
        xs = rng.normal(size=(5, 3))
        ys = rng.normal(size=(4, 3))
        K = kernel_matrix(xs, ys, 1.3)
        for i in range(5):
            for j in range(4):
                assert K[i, j] == pytest.approx(rbf_kernel(xs[i], ys[j], 1.3))

    def test_params_must_be_positive(self):
        with pytest.raises(ParameterError):
            KernelParams(0.0, 1.0)
        with pytest.raises(ParameterError):
            KernelParams(1.0, -0.5)


class TestBinaryTraining:
    def test_two_point_analytic_solution(self):
        # For x = {-1, +1} in 1-D with gamma=1, the unconstrained optimum is
        # alpha = 1 / (1 - exp(-4)) for both points and b = 0, so the
        # decision function vanishes exactly at the midpoint.
        model = train_binary(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]),
                             KernelParams(100.0, 1.0))
        expected = 1.0 / (1.0 - math.exp(-4.0))
        assert np.allclose(np.abs(model.dual_coefs), expected, atol=1e-6)
        assert abs(model.bias) < 1e-6
        assert abs(model.decision(np.array([0.0]))) < 1e-6

    def test_identical_points_opposite_labels_clip_at_C(self):
        C = 2.5
        model = train_binary(np.array([[1.0, 1.0], [1.0, 1.0]]),
                             np.array([1.0, -1.0]), KernelParams(C, 1.0))
        assert np.allclose(np.abs(model.dual_coefs), C)

    def test_single_class_rejected(self):
        with pytest.raises(TrainingError):
            train_binary(np.array([[0.0], [1.0]]), np.array([1.0, 1.0]),
                         KernelParams(1.0, 1.0))

    def test_empty_rejected(self):
        with pytest.raises(TrainingError):
            train_binary(np.empty((0, 2)), np.empty(0), KernelParams(1.0, 1.0))

    def test_separable_data_fit(self):
        rng = np.random.default_rng(2)
        xs = np.vstack([rng.normal(size=(20, 2)) * 0.3 - 3,
                        rng.normal(size=(20, 2)) * 0.3 + 3])
        ys = np.array([-1.0] * 20 + [1.0] * 20)
        model = train_binary(xs, ys, KernelParams(1000.0, 0.5))
        preds = np.sign([model.decision(x) for x in xs])
        assert np.array_equal(preds, ys)

    def test_kkt_invariants(self):
        rng = np.random.default_rng(3)
        for C in (0.5, 10.0):
            xs = rng.normal(size=(24, 3))
            ys = np.where(rng.random(24) < 0.5, -1.0, 1.0)
            ys[0], ys[1] = -1.0, 1.0
            model = train_binary(xs, ys, KernelParams(C, 0.8))
            alpha = np.abs(model.dual_coefs)
            assert (alpha > 0).all() and (alpha <= C + 1e-9).all()
            assert abs(model.dual_coefs.sum()) < 1e-8
            # KKT: free vectors sit on the margin within the stopping tolerance
            free = (alpha > 1e-6) & (alpha < C - 1e-6)
            signs = np.sign(model.dual_coefs)
            for sv, s in zip(model.support_vectors[free], signs[free]):
                assert abs(s * model.decision(sv) - 1.0) < 1e-2

    def test_matches_qp_oracle(self):
        pytest.importorskip("cvxopt")
        rng = np.random.default_rng(4)
        for trial in range(100):
            m = int(rng.integers(2, 9))
            xs = rng.normal(size=(m, 2)) * 2
            ys = np.where(rng.random(m) < 0.5, -1.0, 1.0)
            ys[0] = -1.0
            ys[-1] = 1.0
            params = KernelParams(float(rng.choice([0.5, 1.0, 10.0])),
                                  float(rng.choice([0.2, 1.0])))
            model = train_binary(xs, ys, params)
            oracle = qp_oracle_objective(xs, ys, params)
            assert model.dual_objective >= oracle - 1e-4


class TestOvo:
    def test_pair_count(self):
        rng = np.random.default_rng(5)
        xs, ys = gaussian_blobs(rng, n_classes=3, per_class=5)
        model = train_ovo(xs, ys, KernelParams(10.0, 0.5))
        assert len(model.binaries) == 3
        xs, ys = gaussian_blobs(rng, n_classes=2, per_class=5)
        assert len(train_ovo(xs, ys, KernelParams(10.0, 0.5)).binaries) == 1
        xs, ys = gaussian_blobs(rng, n_classes=10, per_class=5)
        assert len(train_ovo(xs, ys, KernelParams(10.0, 0.5)).binaries) == 45

    def test_single_class_rejected(self):
        with pytest.raises(TrainingError):
            train_ovo(np.zeros((4, 2)), [7, 7, 7, 7], KernelParams(1.0, 1.0))

    def test_blob_prediction(self):
        rng = np.random.default_rng(6)
        xs, ys = gaussian_blobs(rng, n_classes=4, per_class=12)
        model = train_ovo(xs, ys, KernelParams(10.0, 0.5))
        label, votes = predict(model, xs[0])
        assert label == ys[0]
        assert sum(votes.values()) == 6  # every pairwise comparison votes once
        preds = predict_batch(model, xs)
        assert np.mean(np.array(preds) == ys) > 0.95

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(7)
        xs, ys = gaussian_blobs(rng, n_classes=2, per_class=5)
        model = train_ovo(xs, ys, KernelParams(1.0, 1.0))
        with pytest.raises(ContractError):
            predict(model, np.zeros(5))

    def test_tie_breaks_by_decision_strength(self):
        # Hand-built three-class model where every class wins exactly one
        # comparison; class 1 wins its comparison by the largest margin.
        from glyphspectra.svm import OvoModel
        params = KernelParams(1.0, 1.0)
        sv = np.zeros((1, 1))

        def fixed(value):
            # decision(x) = 0 * k(sv, x) + bias = value everywhere
            return BinarySvmModel(sv, np.zeros(1), value, params)

        model = OvoModel(classes=[0, 1, 2])
        model.binaries[(0, 1)] = fixed(0.1)    # class 0 wins, strength 0.1
        model.binaries[(1, 2)] = fixed(5.0)    # class 1 wins, strength 5.0
        model.binaries[(0, 2)] = fixed(-0.2)   # class 2 wins, strength 0.2
        label, votes = predict(model, np.zeros(1))
        assert votes == {0: 1, 1: 1, 2: 1}
        assert label == 1

    def test_tie_breaks_by_lowest_index_last(self):
        from glyphspectra.svm import OvoModel
        params = KernelParams(1.0, 1.0)
        sv = np.zeros((1, 1))
        model = OvoModel(classes=[3, 8])
        # a decision of exactly zero votes for the first class of the pair
        model.binaries[(0, 1)] = BinarySvmModel(sv, np.zeros(1), 0.0, params)
        label, _ = predict(model, np.zeros(1))
        assert label == 3

    def test_training_order_invariance(self):
        rng = np.random.default_rng(8)
        xs, ys = gaussian_blobs(rng, n_classes=3, per_class=10)
        probes = rng.normal(size=(20, 3)) * 4
        a = train_ovo(xs, ys, KernelParams(10.0, 0.5))
        perm = rng.permutation(len(ys))
        b = train_ovo(xs[perm], ys[perm], KernelParams(10.0, 0.5))
        assert predict_batch(a, probes) == predict_batch(b, probes)


class TestGridSearch:
    def test_single_point_grid(self):
        rng = np.random.default_rng(9)
        xs, ys = gaussian_blobs(rng, n_classes=3, per_class=10)
        vx, vy = gaussian_blobs(rng, n_classes=3, per_class=4)
        params, score = grid_search(xs, ys, xs, ys, [10.0], [0.5])
        assert params == KernelParams(10.0, 0.5)
        assert 0.0 <= score <= 1.0

    def test_tie_prefers_smaller_parameters(self):
        # On trivially separable data every grid point scores 1.0, so the
        # smallest C and gamma win.
        xs = np.array([[0.0], [0.1], [5.0], [5.1]])
        ys = np.array([0, 0, 1, 1])
        params, score = grid_search(xs, ys, xs, ys, [100.0, 1.0], [2.0, 0.5])
        assert score == 1.0
        assert params == KernelParams(1.0, 0.5)

    def test_empty_grid_rejected(self):
        with pytest.raises(ParameterError):
            grid_search(np.zeros((2, 1)), [0, 1], np.zeros((2, 1)), [0, 1],
                        [], [1.0])

    def test_default_grids(self):
        g10 = default_grid(10)
        assert len(g10) == 22
        assert g10[0] == pytest.approx(1e-3) and g10[-1] == pytest.approx(1e4)
        g2 = default_grid(2)
        assert g2[0] == 2.0 ** -10 and g2[-1] == 2.0 ** 13
        with pytest.raises(ParameterError):
            default_grid(3)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(10)
        xs, ys = gaussian_blobs(rng, n_classes=3, per_class=8)
        model = train_ovo(xs, ys, KernelParams(10.0, 0.5), feature_type="FT2")
        path = tmp_path / "model.json"
        save_ovo(path, model, n=3)
        loaded = load_ovo(path)
        assert loaded.classes == model.classes
        assert loaded.feature_type == "FT2"
        probes = rng.normal(size=(10, 3)) * 4
        assert predict_batch(loaded, probes) == predict_batch(model, probes)

    def test_dict_round_trip_preserves_values(self):
        rng = np.random.default_rng(11)
        xs, ys = gaussian_blobs(rng, n_classes=2, per_class=6)
        model = train_ovo(xs, ys, KernelParams(2.0, 0.3))
        data = ovo_to_dict(model, n=3)
        assert data["n"] == 3
        clone = ovo_from_dict(data)
        orig = model.binaries[(0, 1)]
        copy = clone.binaries[(0, 1)]
        assert np.array_equal(orig.support_vectors, copy.support_vectors)
        assert np.array_equal(orig.dual_coefs, copy.dual_coefs)
        assert orig.bias == copy.bias
