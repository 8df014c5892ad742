"""Scoring of candidate assessments against a snapshot.

Two criteria are combined into one scalar objective:

* discrepancy: RMSE across learners between the mean score on the whole
  question pool and the mean score on the selected subset (lower is
  better, the subset represents the pool),
* discrimination: population standard deviation across learners of the
  subset mean score (higher is better, the subset separates strong from
  weak learners).

fitness = -discrepancy + lam * discrimination, where lam rescales the two
criteria to comparable magnitude. lam is calibrated as the ratio of the
average discrepancy to the average discrimination over uniformly random
subsets, which places "no better than a random subset" at fitness zero.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Assessment, Snapshot

Genes = Sequence[int] | Assessment

# Soft cap on temporary elements allocated per evaluation chunk.
_CHUNK_ELEMENTS = 5_000_000


@dataclass(frozen=True)
class FitnessReport:
    """One assessment scored on one learner set."""

    rmse: float
    std: float
    fitness: float
    lam: float

    def __post_init__(self) -> None:
        if abs(self.fitness - combined(self.rmse, self.std, self.lam)) > 1e-12:
            raise ValueError("fitness does not equal -rmse + lam * std")


@dataclass(frozen=True)
class CriteriaContext:
    """Snapshot restricted to a learner subset, with precomputed pool means.

    ``columns`` holds the learner-subset columns so that scoring an
    assessment costs O(K * learners) instead of O(questions * learners).
    Read-only after construction; safe to score concurrently.
    """

    snapshot: Snapshot
    learners: tuple[int, ...]
    lam: float | None
    columns: np.ndarray
    pool_means: np.ndarray

    @classmethod
    def build(
        cls,
        snapshot: Snapshot,
        learners: Sequence[int],
        lam: float | None = None,
    ) -> "CriteriaContext":
        learners = tuple(int(x) for x in learners)
        if not learners:
            raise ValueError("learner subset is empty")
        if min(learners) < 0 or max(learners) >= snapshot.n_learners:
            raise ValueError("learner index out of range")
        columns = snapshot.values[:, np.asarray(learners, dtype=np.intp)].copy()
        columns.flags.writeable = False
        pool_means = columns.mean(axis=0)
        pool_means.flags.writeable = False
        return cls(
            snapshot=snapshot,
            learners=learners,
            lam=lam,
            columns=columns,
            pool_means=pool_means,
        )

    def with_lambda(self, lam: float) -> "CriteriaContext":
        if lam < 0:
            raise ValueError("lam must be non-negative")
        return dataclasses.replace(self, lam=float(lam))

    @property
    def n_questions(self) -> int:
        return self.columns.shape[0]

    @property
    def n_learners(self) -> int:
        return self.columns.shape[1]


def combined(rmse: float, std: float, lam: float) -> float:
    """The scalar objective: -rmse + lam * std."""
    return -rmse + lam * std


def _gene_array(ctx: CriteriaContext, genes: Genes) -> np.ndarray:
    """Validated gene indices in sorted order.

    Sorting makes the set semantics literal: any permutation of the same
    genes produces bitwise-identical scores.
    """
    if isinstance(genes, Assessment):
        genes = genes.genes
    arr = np.asarray(genes, dtype=np.intp)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("genes must be a non-empty 1-D index sequence")
    if arr.min() < 0 or arr.max() >= ctx.n_questions:
        raise ValueError("gene index out of range for this snapshot")
    arr = np.sort(arr)
    if np.any(arr[1:] == arr[:-1]):
        raise ValueError("genes must be distinct")
    return arr


def subset_means(ctx: CriteriaContext, genes: Genes) -> np.ndarray:
    """Per-learner mean score over the selected questions."""
    return ctx.columns[_gene_array(ctx, genes)].mean(axis=0)


def discrepancy(ctx: CriteriaContext, genes: Genes) -> float:
    """RMSE across learners between pool means and subset means."""
    diff = ctx.pool_means - subset_means(ctx, genes)
    return float(np.sqrt(np.mean(diff * diff)))


def discrimination(ctx: CriteriaContext, genes: Genes) -> float:
    """Population standard deviation across learners of subset means."""
    return float(subset_means(ctx, genes).std())


def fitness(ctx: CriteriaContext, genes: Genes) -> FitnessReport:
    """Score one assessment; requires a calibrated lam on the context."""
    if ctx.lam is None:
        raise ValueError("context has no lam; calibrate it first")
    means = ctx.columns[_gene_array(ctx, genes)].mean(axis=0)
    diff = ctx.pool_means - means
    rmse = float(np.sqrt(np.mean(diff * diff)))
    std = float(means.std())
    return FitnessReport(
        rmse=rmse, std=std, fitness=combined(rmse, std, ctx.lam), lam=ctx.lam
    )


def batch_criteria(
    ctx: CriteriaContext, genes_matrix: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (rmse, std) for many assessments at once.

    ``genes_matrix`` has one assessment per row. Evaluation is chunked so
    the gather temporaries stay within a fixed memory budget.
    """
    idx = np.asarray(genes_matrix, dtype=np.intp)
    if idx.ndim != 2:
        raise ValueError("genes_matrix must be 2-D")
    if idx.size and (idx.min() < 0 or idx.max() >= ctx.n_questions):
        raise ValueError("gene index out of range for this snapshot")
    idx = np.sort(idx, axis=1)
    n, k = idx.shape
    rmse = np.empty(n)
    std = np.empty(n)
    chunk = max(1, _CHUNK_ELEMENTS // max(1, k * ctx.n_learners))
    for start in range(0, n, chunk):
        block = idx[start : start + chunk]
        means = ctx.columns[block].mean(axis=1)
        diff = means - ctx.pool_means
        rmse[start : start + chunk] = np.sqrt(np.mean(diff * diff, axis=1))
        std[start : start + chunk] = means.std(axis=1)
    return rmse, std


def batch_fitness(ctx: CriteriaContext, genes_matrix: np.ndarray) -> np.ndarray:
    """Vectorized fitness values for many assessments."""
    if ctx.lam is None:
        raise ValueError("context has no lam; calibrate it first")
    rmse, std = batch_criteria(ctx, genes_matrix)
    return -rmse + ctx.lam * std


def sample_subsets(
    n_questions: int, k: int, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform random K-subsets (with replacement across samples)."""
    draws = np.empty((n_samples, k), dtype=np.intp)
    for i in range(n_samples):
        draws[i] = rng.choice(n_questions, size=k, replace=False)
    return draws


def calibrate_lambda(
    ctx: CriteriaContext, k: int, n_samples: int = 10_000, seed: int = 0
) -> float:
    """Estimate lam = mean(rmse) / mean(std) over random K-subsets.

    Deterministic in the seed. Raises when the snapshot shows no learner
    variance at all (mean std of zero), in which case lam is undefined.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if not 1 <= k <= ctx.n_questions:
        raise ValueError("k must lie in [1, number of questions]")
    rng = np.random.default_rng(seed)
    draws = sample_subsets(ctx.n_questions, k, n_samples, rng)
    rmse, std = batch_criteria(ctx, draws)
    mean_std = float(std.mean())
    if mean_std <= 0.0:
        raise ValueError("snapshot has no learner discrimination; lambda undefined")
    return float(rmse.mean()) / mean_std
