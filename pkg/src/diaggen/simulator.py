"""Synthetic learner population with concept skills and skill growth.

Each question belongs to one concept and carries a difficulty; each learner
carries one skill value per concept. A learner answers every question in
index order. The success probability follows a guessing-floor logistic
model, and a correct answer adds the question's growth factor to the
matching concept skill. The ground-truth snapshot is taken at the end of
each learner's history, from the final skills.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import Interaction, InteractionLog, Snapshot


@dataclass(frozen=True)
class SimConfig:
    num_learners: int
    num_questions: int = 50
    num_concepts: int = 5
    slip: float = 0.25
    growth_mean: float = 0.4
    growth_std: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_learners < 1:
            raise ValueError("num_learners must be at least 1")
        if not self.num_questions >= self.num_concepts >= 1:
            raise ValueError("need num_questions >= num_concepts >= 1")
        if not 0.0 <= self.slip < 1.0:
            raise ValueError("slip must lie in [0, 1)")
        if self.growth_std < 0.0:
            raise ValueError("growth_std must be non-negative")


@dataclass(frozen=True)
class SimWorld:
    """Frozen draw of question and learner parameters.

    ``learner_skill`` holds the initial skills, before any growth.
    """

    question_concept: np.ndarray
    question_difficulty: np.ndarray
    question_growth: np.ndarray
    learner_skill: np.ndarray


def solve_probability(alpha, beta, c):
    """Probability of a correct answer: c + (1 - c) / (1 + exp(alpha - beta)).

    ``alpha`` is question difficulty, ``beta`` the learner's skill on the
    question's concept, ``c`` the guessing floor. Accepts scalars or arrays.
    """
    return c + (1.0 - c) * expit(np.asarray(beta) - np.asarray(alpha))


def simulate(cfg: SimConfig) -> tuple[SimWorld, InteractionLog, Snapshot]:
    """Generate a world, the full interaction log, and the true snapshot.

    Draw order is fixed for reproducibility: the world comes from one child
    stream of the seed (concepts, difficulties, growth factors, skills, in
    that order), then each learner consumes an independent child stream
    derived from (seed, learner index), with one uniform draw per question.
    Learners may therefore be simulated concurrently with results identical
    to sequential execution.
    """
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.num_learners + 1)
    world_rng = np.random.default_rng(streams[0])

    concepts = world_rng.integers(0, cfg.num_concepts, size=cfg.num_questions)
    difficulty = world_rng.standard_normal(cfg.num_questions)
    growth = cfg.growth_mean + cfg.growth_std * world_rng.standard_normal(
        cfg.num_questions
    )
    skills = world_rng.standard_normal((cfg.num_learners, cfg.num_concepts))
    world = SimWorld(
        question_concept=concepts,
        question_difficulty=difficulty,
        question_growth=growth,
        learner_skill=skills,
    )

    records: list[Interaction] = []
    final_skills = np.empty_like(skills)
    for j in range(cfg.num_learners):
        rng = np.random.default_rng(streams[j + 1])
        draws = rng.random(cfg.num_questions)
        skill = skills[j].copy()
        learner_id = f"l{j}"
        for q in range(cfg.num_questions):
            concept = int(concepts[q])
            p = solve_probability(difficulty[q], skill[concept], cfg.slip)
            correct = bool(draws[q] < p)
            if correct:
                skill[concept] += growth[q]
            records.append(Interaction(learner_id, f"q{q}", correct, q))
        final_skills[j] = skill

    beta = final_skills[:, concepts].T
    values = solve_probability(difficulty[:, None], beta, cfg.slip)
    snapshot = Snapshot(
        values=values,
        question_ids=tuple(f"q{q}" for q in range(cfg.num_questions)),
        learner_ids=tuple(f"l{j}" for j in range(cfg.num_learners)),
    )
    return world, InteractionLog(tuple(records)), snapshot
