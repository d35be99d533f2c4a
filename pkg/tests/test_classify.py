"""DWD training, the one-vs-one layer, and the cells-alone decision rule."""

import pickle

import numpy as np
import pytest

from cellwell import (
    LinearModel,
    MulticlassModel,
    auto_penalty,
    cells_alone_decide,
    decide_from_score,
    dwd_predict,
    dwd_train,
    load_model,
    loocv_error,
    ovo_predict,
    ovo_train,
    save_model,
    slack_variables,
    well_scores,
)
from cellwell import BioAssessment, CellTable, PipelineConfig, join
from cellwell.errors import (
    DegenerateData,
    DimensionMismatch,
    EmptyInput,
    FoldMissingClass,
    MissingClass,
    NonConverged,
    SingleClass,
)


def separable_instance(seed=0, m=10, d=3, gap=6.0):
    rng = np.random.default_rng(seed)
    X = np.vstack(
        [rng.normal(-gap / 2, 1.0, size=(m, d)), rng.normal(gap / 2, 1.0, size=(m, d))]
    )
    y = np.asarray([-1.0] * m + [1.0] * m)
    return X, y


class TestAutoPenalty:
    def test_hand_value_odd_pair_count(self):
        # One positive, three negatives at distances 3, 4, 8: median 4.
        X = np.asarray([[0.0], [3.0], [4.0], [8.0]])
        y = np.asarray([1, -1, -1, -1])
        assert auto_penalty(X, y) == pytest.approx(100.0 / 16.0)

    def test_hand_value_even_pair_count(self):
        # Distances 3, 4, 8, 9: the median distance is 6, so C = 100/36.
        X = np.asarray([[0.0], [3.0], [4.0], [8.0], [9.0]])
        y = np.asarray([1, -1, -1, -1, -1])
        assert auto_penalty(X, y) == pytest.approx(100.0 / 36.0)

    def test_scale_invariance_of_margins(self):
        # C scales as 1/s^2 when the data scale by s.
        X, y = separable_instance(1)
        assert auto_penalty(3.0 * X, y) == pytest.approx(auto_penalty(X, y) / 9.0)

    def test_single_class(self):
        with pytest.raises(SingleClass):
            auto_penalty(np.ones((3, 1)), np.asarray([1, 1, 1]))

    def test_coincident_classes(self):
        X = np.zeros((4, 2))
        y = np.asarray([1, 1, -1, -1])
        with pytest.raises(DegenerateData):
            auto_penalty(X, y)


class TestDwdTrain:
    def test_separable_fit(self):
        X, y = separable_instance()
        model = dwd_train(X, y)
        assert np.array_equal(dwd_predict(model, X), y)
        assert model.solver_report.kkt_residual <= 1e-6

    def test_constraint_feasibility(self):
        X, y = separable_instance(2)
        model = dwd_train(X, y)
        assert np.linalg.norm(model.w) <= 1.0 + 1e-8
        r, xi = slack_variables(model, X, y)
        assert (xi >= 0.0).all()
        assert (r >= 1.0 / np.sqrt(model.penalty) - 1e-8).all()

    def test_objective_matches_frozen_oracle(self):
        # Reference optimum computed once with an independent second-order
        # cone solver on this exact instance and frozen.
        rng = np.random.default_rng(314)
        X = np.vstack(
            [rng.normal(-1.0, 1.0, size=(12, 4)), rng.normal(1.0, 1.0, size=(12, 4))]
        )
        y = np.asarray([-1.0] * 12 + [1.0] * 12)
        model = dwd_train(X, y)
        assert model.penalty == pytest.approx(4.887968494785229, rel=1e-12)
        assert model.solver_report.objective == pytest.approx(
            20.032631497663104, rel=1e-6
        )

    def test_objective_trace_monotone(self):
        X, y = separable_instance(3)
        model = dwd_train(X, y, keep_trace=True)
        trace = model.solver_report.objective_trace
        assert trace is not None
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))

    def test_explicit_penalty_respected(self):
        X, y = separable_instance(4)
        model = dwd_train(X, y, C=2.5)
        assert model.penalty == 2.5

    def test_label_validation(self):
        X, _ = separable_instance()
        with pytest.raises(DegenerateData):
            dwd_train(X, np.zeros(X.shape[0]))

    def test_single_class_rejected(self):
        X, _ = separable_instance()
        with pytest.raises(SingleClass):
            dwd_train(X, np.ones(X.shape[0]))

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            dwd_train(np.empty((0, 2)), np.empty(0))

    def test_prediction_zero_score_is_positive(self):
        model = LinearModel(np.asarray([1.0]), 0.0, 1.0)
        assert dwd_predict(model, np.asarray([[0.0]]))[0] == 1

    def test_nonconverged_pickles(self):
        err = NonConverged(3.5e-6, 10000)
        back = pickle.loads(pickle.dumps(err))
        assert back.residual == err.residual
        assert back.iterations == err.iterations


class TestOvo:
    @staticmethod
    def _training_data(n_per=6, gap=8.0, seed=5):
        rng = np.random.default_rng(seed)
        X = np.vstack(
            [
                rng.normal(0.0, 1.0, size=(n_per, 2)),
                rng.normal(gap, 1.0, size=(n_per, 2)),
                rng.normal(2 * gap, 1.0, size=(n_per, 2)),
            ]
        )
        classes = ("Low",) * n_per + ("Medium",) * n_per + ("High",) * n_per
        return X, classes

    def test_separated_classes_recovered(self):
        X, classes = self._training_data()
        model = ovo_train(X, classes)
        assert ovo_predict(model, X) == classes

    def test_full_tie_votes_medium(self):
        # Hand-built voters: each class wins exactly one pairwise vote at x=1.
        lm = LinearModel(np.asarray([-1.0]), -1.0, 1.0)  # Low beats Medium
        lh = LinearModel(np.asarray([1.0]), 0.0, 1.0)  # High beats Low
        mh = LinearModel(np.asarray([-1.0]), 0.0, 1.0)  # Medium beats High
        model = MulticlassModel(
            ((("Low", "Medium"), lm), (("Low", "High"), lh), (("Medium", "High"), mh))
        )
        assert ovo_predict(model, np.asarray([[1.0]])) == ("Medium",)

    def test_missing_pair_rejected(self):
        lm = LinearModel(np.asarray([1.0]), 0.0, 1.0)
        with pytest.raises(MissingClass):
            MulticlassModel(((("Low", "Medium"), lm),))

    def test_two_class_input_rejected(self):
        X, _ = separable_instance()
        classes = ("Low",) * 10 + ("High",) * 10
        with pytest.raises(MissingClass):
            ovo_train(X, classes)


class TestDecisionRules:
    def test_decide_from_score_rounds_half_up(self):
        assert decide_from_score(1.49) == "Low"
        assert decide_from_score(1.5) == "Medium"
        assert decide_from_score(2.49) == "Medium"
        assert decide_from_score(2.5) == "High"

    def test_decide_from_score_clamps(self):
        assert decide_from_score(-3.0) == "Low"
        assert decide_from_score(9.0) == "High"

    def test_well_scores_mean_encoding(self):
        scores = well_scores(
            ("Low", "High", "Medium", "Medium"), ("A", "A", "B", "B")
        )
        assert scores == {"A": 2.0, "B": 2.0}

    def test_cells_alone_decide(self):
        decided = cells_alone_decide(
            ("Low", "Low", "High", "High", "High"), ("A", "A", "B", "B", "B")
        )
        assert decided == {"A": "Low", "B": "High"}

    def test_cells_alone_order_invariant(self):
        classes = ("Low", "Medium", "High", "Low", "High", "High")
        ids = ("A", "B", "A", "B", "A", "B")
        perm = np.random.default_rng(8).permutation(len(ids))
        shuffled = cells_alone_decide(
            tuple(classes[i] for i in perm), tuple(ids[i] for i in perm)
        )
        assert shuffled == cells_alone_decide(classes, ids)

    def test_unknown_class_rejected(self):
        with pytest.raises(MissingClass):
            well_scores(("Tiny",), ("A",))

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            well_scores(("Low",), ("A", "B"))


class TestLoocv:
    @staticmethod
    def _dataset(n_wells=9, cells=6, gap=9.0, seed=11):
        rng = np.random.default_rng(seed)
        ids, rows = [], []
        classes = []
        for k in range(n_wells):
            cls = ("Low", "Medium", "High")[k % 3]
            center = {"Low": 0.0, "Medium": gap, "High": 2 * gap}[cls]
            block = rng.normal(center, 1.0, size=(cells, 2))
            rows.append(block)
            ids.extend([f"W{k}"] * cells)
            classes.append(cls)
        cells_t = CellTable(tuple(ids), ("f1", "f2"), np.vstack(rows))
        order = np.argsort([{"Low": 0, "Medium": 1, "High": 2}[c] for c in classes], kind="stable")
        ranks = np.empty(n_wells, dtype=int)
        ranks[order] = np.arange(1, n_wells + 1)
        assess = BioAssessment(
            tuple(f"W{k}" for k in range(n_wells)), tuple(ranks), tuple(classes)
        )
        return join(cells_t, assess)

    def test_separated_wells_have_zero_loocv_error(self):
        ds = self._dataset()
        err = loocv_error(ds, PipelineConfig("wells"))
        assert err == 0.0

    def test_fold_losing_a_class_is_rejected(self):
        # Only one Low well: its fold has no Low training data.
        rng = np.random.default_rng(12)
        ids = tuple(f"W{k}" for k in range(5) for _ in range(4))
        cells_t = CellTable(ids, ("f1",), rng.normal(size=(20, 1)))
        assess = BioAssessment(
            tuple(f"W{k}" for k in range(5)),
            (1, 2, 3, 4, 5),
            ("Low", "Medium", "Medium", "High", "High"),
        )
        with pytest.raises(FoldMissingClass):
            loocv_error(join(cells_t, assess), PipelineConfig("wells"))


class TestModelIo:
    def test_round_trip(self, tmp_path):
        X, y = separable_instance(6)
        model = dwd_train(X, y)
        path = tmp_path / "model.csv"
        save_model(model, path)
        back = load_model(path)
        np.testing.assert_array_equal(back.w, model.w)
        assert back.b == model.b
        assert back.penalty == model.penalty
