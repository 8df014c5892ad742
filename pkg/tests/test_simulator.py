import numpy as np
import pytest

from diaggen import SimConfig, simulate, solve_probability


class TestSolveProbability:
    def test_logistic_symmetry(self):
        assert solve_probability(1.3, 1.3, 0.0) == pytest.approx(0.5, abs=1e-15)

    def test_guessing_floor(self):
        assert solve_probability(0.7, 0.7, 0.25) == pytest.approx(0.625, abs=1e-15)

    def test_numeric_example(self):
        # 0.25 + 0.75 / (1 + e^2), high-precision value from mpmath
        assert solve_probability(2.0, 0.0, 0.25) == pytest.approx(
            0.33940219151658816, abs=1e-12
        )

    def test_against_high_precision_oracle(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 40
        rng = np.random.default_rng(0)
        for _ in range(200):
            alpha = float(rng.normal())
            beta = float(rng.normal())
            c = float(rng.uniform(0.0, 0.9))
            want = float(
                mp.mpf(c) + (1 - mp.mpf(c)) / (1 + mp.e ** (mp.mpf(alpha) - mp.mpf(beta)))
            )
            assert solve_probability(alpha, beta, c) == pytest.approx(want, abs=1e-12)

    def test_range(self):
        rng = np.random.default_rng(1)
        alpha = rng.normal(size=1000)
        beta = rng.normal(size=1000)
        p = solve_probability(alpha, beta, 0.25)
        assert np.all(p >= 0.25) and np.all(p < 1.0)


class TestSimulate:
    def test_record_layout(self):
        cfg = SimConfig(num_learners=7, num_questions=12, num_concepts=3, seed=5)
        _, log, snapshot = simulate(cfg)
        assert len(log) == 7 * 12
        per_learner: dict[str, list[int]] = {}
        for rec in log.records:
            per_learner.setdefault(rec.learner_id, []).append(rec.order)
            assert rec.question_id == f"q{rec.order}"
        for orders in per_learner.values():
            assert orders == list(range(12))
        assert snapshot.n_questions == 12 and snapshot.n_learners == 7

    def test_deterministic(self):
        cfg = SimConfig(num_learners=10, seed=3)
        w1, l1, s1 = simulate(cfg)
        w2, l2, s2 = simulate(cfg)
        assert l1 == l2
        np.testing.assert_array_equal(s1.values, s2.values)
        np.testing.assert_array_equal(w1.learner_skill, w2.learner_skill)

    def test_seed_changes_log(self):
        _, l1, _ = simulate(SimConfig(num_learners=10, seed=3))
        _, l2, _ = simulate(SimConfig(num_learners=10, seed=4))
        assert l1 != l2

    def test_forced_success_when_floor_near_one(self):
        cfg = SimConfig(num_learners=5, num_questions=20, slip=1.0 - 1e-12, seed=0)
        world, log, snapshot = simulate(cfg)
        assert all(rec.correct for rec in log.records)
        # every concept skill ends at initial plus the summed growth of
        # its questions, visible through the snapshot values
        for j in range(5):
            final = world.learner_skill[j].copy()
            for q in range(20):
                final[world.question_concept[q]] += world.question_growth[q]
            expect = solve_probability(
                world.question_difficulty,
                final[world.question_concept],
                cfg.slip,
            )
            np.testing.assert_allclose(snapshot.values[:, j], expect, atol=1e-12)

    def test_no_growth_snapshot_is_static(self):
        cfg = SimConfig(
            num_learners=6, num_questions=10, growth_mean=0.0, growth_std=0.0, seed=2
        )
        world, _, snapshot = simulate(cfg)
        static = solve_probability(
            world.question_difficulty[:, None],
            world.learner_skill[:, world.question_concept].T,
            cfg.slip,
        )
        np.testing.assert_array_equal(snapshot.values, static)

    def test_growth_never_decreases_success_probability(self):
        cfg = SimConfig(num_learners=20, num_questions=30, growth_std=0.0, seed=8)
        world, _, snapshot = simulate(cfg)
        static = solve_probability(
            world.question_difficulty[:, None],
            world.learner_skill[:, world.question_concept].T,
            cfg.slip,
        )
        assert np.all(snapshot.values >= static - 1e-12)

    def test_snapshot_range(self):
        cfg = SimConfig(num_learners=50, seed=11)
        _, _, snapshot = simulate(cfg)
        assert snapshot.values.min() >= cfg.slip
        assert snapshot.values.max() < 1.0

    def test_empirical_rate_matches_model(self):
        # one-question world: the response uses the initial skill, so the
        # empirical rate converges on the mean model probability
        cfg = SimConfig(
            num_learners=10_000, num_questions=1, num_concepts=1, seed=13
        )
        world, log, _ = simulate(cfg)
        p = solve_probability(
            world.question_difficulty[0], world.learner_skill[:, 0], cfg.slip
        )
        rate = np.mean([rec.correct for rec in log.records])
        assert rate == pytest.approx(float(p.mean()), abs=0.02)

    def test_scale(self):
        cfg = SimConfig(num_learners=100, num_questions=50, seed=1)
        _, log, _ = simulate(cfg)
        assert len(log) == 5000


class TestSimConfigValidation:
    def test_bad_slip(self):
        with pytest.raises(ValueError, match="slip"):
            SimConfig(num_learners=5, slip=1.0)

    def test_concepts_exceed_questions(self):
        with pytest.raises(ValueError, match="num_questions"):
            SimConfig(num_learners=5, num_questions=3, num_concepts=4)

    def test_negative_growth_std(self):
        with pytest.raises(ValueError, match="growth_std"):
            SimConfig(num_learners=5, growth_std=-0.1)
