import numpy as np
import pytest
from scipy.special import expit
from scipy.stats import spearmanr

from diaggen import (
    Interaction,
    InteractionLog,
    Snapshot,
    correct_ratio_snapshot,
    fit_abilities,
    fit_rasch,
    mean_performance_correlation,
    rasch_snapshot,
    subsample_learners,
    sufficiency_curve,
)
from diaggen.estimation import per_question_sufficiency_curve


def make_log(triples):
    return InteractionLog(
        tuple(Interaction(l, q, bool(c), o) for (l, q, c, o) in triples)
    )


def bernoulli_log(theta, b, seed):
    """One attempt per learner-question pair under sigmoid(theta - b)."""
    rng = np.random.default_rng(seed)
    records = []
    for l, th in enumerate(theta):
        y = rng.random(len(b)) < expit(th - np.asarray(b))
        records.extend(
            Interaction(f"l{l}", f"q{q}", bool(y[q]), q) for q in range(len(b))
        )
    return InteractionLog(tuple(records))


class TestCorrectRatioSnapshot:
    def test_all_correct_saturates(self):
        log = make_log([("l0", "q0", 1, 0), ("l1", "q0", 1, 0), ("l0", "q1", 1, 1)])
        snap = correct_ratio_snapshot(log, smoothing=0.0)
        np.testing.assert_allclose(snap.values, 1.0 - 1e-3)

    def test_single_record_laplace(self):
        # p_q = a_l = g = (1 + 1) / (1 + 2), entry collapses to 2/3
        snap = correct_ratio_snapshot(make_log([("l0", "q0", 1, 0)]), smoothing=1.0)
        assert snap.values[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_stronger_learner_has_higher_column(self):
        triples = []
        for q in range(6):
            triples.append(("good", f"q{q}", 1, q))
            triples.append(("poor", f"q{q}", q % 3 == 0, q))
        snap = correct_ratio_snapshot(make_log(triples))
        good = snap.values[:, snap.learner_ids.index("good")]
        poor = snap.values[:, snap.learner_ids.index("poor")]
        assert good.mean() >= poor.mean()
        assert np.all(good >= poor)

    def test_fit_learner_restriction_changes_question_stats(self):
        triples = [("a", "q0", 1, 0), ("b", "q0", 0, 0)]
        full = correct_ratio_snapshot(make_log(triples), fit_learners=None)
        only_a = correct_ratio_snapshot(make_log(triples), fit_learners={"a"})
        assert not np.array_equal(full.values, only_a.values)

    def test_values_in_open_unit_interval(self):
        rng = np.random.default_rng(0)
        triples = [
            (f"l{rng.integers(8)}", f"q{rng.integers(5)}", int(rng.random() < 0.6), o)
            for o in range(300)
        ]
        snap = correct_ratio_snapshot(make_log(triples))
        assert snap.values.min() >= 1e-3 and snap.values.max() <= 1 - 1e-3

    def test_empty_log_rejected(self):
        with pytest.raises(ValueError):
            correct_ratio_snapshot(InteractionLog(()))


class TestFitRasch:
    def test_generate_then_recover(self):
        rng = np.random.default_rng(17)
        theta_true = rng.standard_normal(200)
        b_true = rng.standard_normal(50)
        model = fit_rasch(bernoulli_log(theta_true, b_true, seed=17))
        assert spearmanr(model.theta, theta_true).statistic >= 0.9
        assert spearmanr(model.b, b_true).statistic >= 0.9

    def test_difficulties_centered(self):
        rng = np.random.default_rng(3)
        model = fit_rasch(bernoulli_log(rng.standard_normal(30), rng.standard_normal(12), 3))
        assert abs(model.b.mean()) < 1e-9

    def test_objective_monotone_non_increasing(self):
        rng = np.random.default_rng(5)
        model = fit_rasch(bernoulli_log(rng.standard_normal(40), rng.standard_normal(15), 5))
        nll = np.asarray(model.nll_history)
        assert np.all(np.diff(nll) <= 1e-9)

    def test_all_correct_learner_gets_max_theta(self):
        rng = np.random.default_rng(9)
        triples = []
        for q in range(10):
            triples.append(("ace", f"q{q}", 1, q))
            for l in range(4):
                triples.append((f"l{l}", f"q{q}", int(rng.random() < 0.5), q))
        model = fit_rasch(make_log(triples))
        ace = model.theta[model.learner_ids.index("ace")]
        assert ace == max(model.theta)

    def test_identical_responses_identical_theta(self):
        pattern = [1, 0, 1, 1, 0, 1]
        triples = []
        for name in ("twin1", "twin2"):
            triples.extend((name, f"q{q}", pattern[q], q) for q in range(6))
        triples.extend(("other", f"q{q}", 1 - pattern[q], q) for q in range(6))
        model = fit_rasch(make_log(triples))
        t1 = model.theta[model.learner_ids.index("twin1")]
        t2 = model.theta[model.learner_ids.index("twin2")]
        assert abs(t1 - t2) < 1e-6

    def test_divergent_learning_rate_raises(self):
        rng = np.random.default_rng(1)
        log = bernoulli_log(rng.standard_normal(10), rng.standard_normal(5), 1)
        with pytest.raises(ValueError, match="epoch"):
            fit_rasch(log, learning_rate=1e200)


class TestRaschSnapshot:
    def make_model(self, theta, b):
        rng = np.random.default_rng(0)
        log = bernoulli_log(np.zeros(len(theta)), np.zeros(len(b)), 0)
        model = fit_rasch(log, max_epochs=1)
        object.__setattr__(model, "theta", np.asarray(theta, dtype=float))
        object.__setattr__(model, "b", np.asarray(b, dtype=float))
        return model

    def test_matched_ability_and_difficulty(self):
        snap = rasch_snapshot(self.make_model([1.7], [1.7]))
        assert snap.values[0, 0] == pytest.approx(0.5, abs=1e-15)

    def test_column_means(self):
        snap = rasch_snapshot(self.make_model([1.0, -1.0], [0.0]))
        np.testing.assert_allclose(
            snap.values.mean(axis=0),
            [0.7310585786300049, 0.2689414213699951],
            atol=1e-12,
        )

    def test_monotone_in_ability(self):
        theta = [-2.0, -0.5, 0.3, 1.9]
        snap = rasch_snapshot(self.make_model(theta, [0.0, 1.0, -1.0]))
        for row in snap.values:
            assert np.all(np.diff(row) > 0)

    def test_open_interval(self):
        snap = rasch_snapshot(self.make_model([5.0, -5.0], [0.0]))
        assert np.all((snap.values > 0) & (snap.values < 1))


class TestFitAbilities:
    def test_held_out_learners_recovered(self):
        rng = np.random.default_rng(23)
        theta_true = rng.standard_normal(120)
        b_true = rng.standard_normal(30)
        log = bernoulli_log(theta_true, b_true, seed=23)
        train_ids = {f"l{l}" for l in range(100)}
        test_ids = {f"l{l}" for l in range(100, 120)}
        model = fit_rasch(log.restrict_learners(train_ids))
        theta, order = fit_abilities(model, log.restrict_learners(test_ids))
        assert set(order) == test_ids
        truth = np.array([theta_true[int(l[1:])] for l in order])
        assert spearmanr(theta, truth).statistic >= 0.85

    def test_difficulties_untouched(self):
        rng = np.random.default_rng(2)
        log = bernoulli_log(rng.standard_normal(30), rng.standard_normal(8), 2)
        model = fit_rasch(log.restrict_learners({f"l{l}" for l in range(20)}))
        before = model.b.copy()
        fit_abilities(model, log.restrict_learners({f"l{l}" for l in range(20, 30)}))
        np.testing.assert_array_equal(model.b, before)

    def test_unknown_question_rejected(self):
        model = fit_rasch(make_log([("l0", "q0", 1, 0), ("l1", "q0", 0, 0)]))
        with pytest.raises(ValueError, match="not in the fitted model"):
            fit_abilities(model, make_log([("lx", "q9", 1, 0)]))


class TestSubsampleLearners:
    def make(self, n=10):
        rng = np.random.default_rng(4)
        return Snapshot(
            rng.random((5, n)),
            tuple(f"q{i}" for i in range(5)),
            tuple(f"l{j}" for j in range(n)),
        )

    def test_full_size_is_identity(self):
        snap = self.make()
        out = subsample_learners(snap, snap.n_learners, seed=7)
        np.testing.assert_array_equal(out.values, snap.values)
        assert out.learner_ids == snap.learner_ids

    def test_single_column(self):
        out = subsample_learners(self.make(), 1, seed=0)
        assert out.n_learners == 1 and out.n_questions == 5

    def test_columns_preserved_exactly(self):
        snap = self.make()
        out = subsample_learners(snap, 4, seed=3)
        for new_col, lid in enumerate(out.learner_ids):
            old_col = snap.learner_ids.index(lid)
            np.testing.assert_array_equal(
                out.values[:, new_col], snap.values[:, old_col]
            )

    def test_order_preserved(self):
        out = subsample_learners(self.make(), 6, seed=5)
        positions = [int(l[1:]) for l in out.learner_ids]
        assert positions == sorted(positions)

    def test_deterministic(self):
        snap = self.make()
        a = subsample_learners(snap, 4, seed=9)
        b = subsample_learners(snap, 4, seed=9)
        assert a.learner_ids == b.learner_ids

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            subsample_learners(self.make(), 0, seed=0)
        with pytest.raises(ValueError):
            subsample_learners(self.make(), 11, seed=0)


class TestSufficiencyCurve:
    def test_identical_columns_all_zero(self):
        # dyadic values keep the running means exact
        col = np.array([0.25, 0.5, 0.75, 0.5, 0.25, 0.75])
        snap = Snapshot(
            np.tile(col[:, None], (1, 30)),
            tuple(f"q{i}" for i in range(6)),
            tuple(f"l{j}" for j in range(30)),
        )
        curve = sufficiency_curve(snap, step=5, epsilon=1e-4, window=3, seed=0)
        assert all(d == 0.0 for d in curve.deltas)
        assert curve.chosen_n == curve.counts[0] == 10

    def test_two_column_hand_example(self):
        snap = Snapshot(
            np.array([[0.0, 1.0], [0.0, 1.0]]), ("q0", "q1"), ("lo", "hi")
        )
        curve = sufficiency_curve(snap, step=1, epsilon=1e-4, window=1, seed=0)
        assert curve.counts == (2,)
        assert curve.deltas[0] == pytest.approx(0.5, abs=1e-15)

    def test_grid_includes_partial_tail(self):
        rng = np.random.default_rng(0)
        snap = Snapshot(
            rng.random((3, 25)),
            tuple(f"q{i}" for i in range(3)),
            tuple(f"l{j}" for j in range(25)),
        )
        curve = sufficiency_curve(snap, step=10, seed=0)
        assert curve.counts == (20, 25)

    def test_deltas_shrink_with_count(self):
        rng = np.random.default_rng(6)
        snap = Snapshot(
            np.clip(rng.normal(0.5, 0.15, size=(10, 2000)), 0, 1),
            tuple(f"q{i}" for i in range(10)),
            tuple(f"l{j}" for j in range(2000)),
        )
        curve = sufficiency_curve(snap, step=100, seed=1)
        late = np.mean(curve.deltas[-5:])
        assert late < curve.deltas[0]

    def test_no_settling_gives_none(self):
        snap = Snapshot(
            np.array([[0.0, 1.0, 0.0, 1.0]]), ("q0",), tuple(f"l{j}" for j in range(4))
        )
        curve = sufficiency_curve(snap, step=1, epsilon=1e-12, window=2, seed=0)
        assert curve.chosen_n is None

    def test_per_question_variant_is_stricter(self):
        rng = np.random.default_rng(8)
        snap = Snapshot(
            rng.random((6, 600)),
            tuple(f"q{i}" for i in range(6)),
            tuple(f"l{j}" for j in range(600)),
        )
        scalar = sufficiency_curve(snap, step=50, epsilon=0.01, seed=2)
        per_q = per_question_sufficiency_curve(snap, step=50, epsilon=0.01, seed=2)
        assert scalar.counts == per_q.counts
        assert all(pq >= s for pq, s in zip(per_q.deltas, scalar.deltas))

    def test_validation(self):
        snap = Snapshot(np.full((1, 4), 0.5), ("q0",), tuple(f"l{j}" for j in range(4)))
        with pytest.raises(ValueError):
            sufficiency_curve(snap, step=0)
        with pytest.raises(ValueError):
            sufficiency_curve(snap, step=1, epsilon=0.0)
        with pytest.raises(ValueError):
            sufficiency_curve(snap, step=1, window=0)


class TestMeanPerformanceCorrelation:
    def test_perfect_on_identical(self):
        rng = np.random.default_rng(0)
        snap = Snapshot(
            rng.random((4, 20)),
            tuple(f"q{i}" for i in range(4)),
            tuple(f"l{j}" for j in range(20)),
        )
        pearson, spearman = mean_performance_correlation(snap, snap)
        assert pearson == pytest.approx(1.0, abs=1e-12)
        assert spearman == pytest.approx(1.0, abs=1e-12)

    def test_aligns_by_external_id(self):
        rng = np.random.default_rng(1)
        values = rng.random((3, 10))
        qids = tuple(f"q{i}" for i in range(3))
        lids = tuple(f"l{j}" for j in range(10))
        snap = Snapshot(values, qids, lids)
        perm = rng.permutation(10)
        shuffled = Snapshot(values[:, perm], qids, tuple(lids[i] for i in perm))
        pearson, _ = mean_performance_correlation(snap, shuffled)
        assert pearson == pytest.approx(1.0, abs=1e-12)

    def test_requires_common_learners(self):
        a = Snapshot(np.full((1, 2), 0.5), ("q0",), ("l0", "l1"))
        b = Snapshot(np.full((1, 2), 0.5), ("q0",), ("l8", "l9"))
        with pytest.raises(ValueError, match="common learners"):
            mean_performance_correlation(a, b)
