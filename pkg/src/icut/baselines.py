"""Comparison subset selectors: random, entropy, forgetting, herding.

Entropy and forgetting consume per-sample scores produced by a model
trained on the full noisy set (see ``mlp.entropy_scores`` and
``mlp.forgetting_counts``); this module only ranks them.  Herding runs a
greedy mean-matching scan per noisy class in the chosen representation
space.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import kernels
from .core import LabeledDataset, SelectionResult, rank_select, round_half_up
from .representation import RepresentedDataset


def random_select(dataset: LabeledDataset, tau: float, seed: int = 0) -> SelectionResult:
    """Uniform sample without replacement of round(tau*n) ids."""
    if not (0.0 < tau <= 1.0):
        raise ValueError("tau must lie in (0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), 29]))
    scores = rng.random(dataset.n)
    selected = rank_select(scores, dataset.ids, tau)
    return SelectionResult(scores=scores, selected=selected, method="random",
                           representation_kind="identity", tau=float(tau))


def entropy_select(dataset: LabeledDataset, entropy: np.ndarray, tau: float) -> SelectionResult:
    """Retain the round(tau*n) lowest-entropy samples, ties by id."""
    entropy = np.asarray(entropy, dtype=np.float64)
    if entropy.shape != (dataset.n,):
        raise ValueError("score length mismatch")
    selected = rank_select(entropy, dataset.ids, tau)
    return SelectionResult(scores=entropy, selected=selected, method="entropy",
                           representation_kind="identity", tau=float(tau))


def forget_select(dataset: LabeledDataset, counts: np.ndarray, tau: float) -> SelectionResult:
    """Retain the round(tau*n) least-forgotten samples, ties by id."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (dataset.n,):
        raise ValueError("score length mismatch")
    selected = rank_select(counts, dataset.ids, tau)
    return SelectionResult(scores=counts, selected=selected, method="forget",
                           representation_kind="identity", tau=float(tau))


def _class_shares(labels: np.ndarray, num_classes: int, total: int) -> np.ndarray:
    """Floor of each class's proportional share; remainders to largest classes."""
    n = labels.size
    sizes = np.bincount(labels, minlength=num_classes)
    shares = (total * sizes) // n
    remainder = total - int(shares.sum())
    by_size = np.lexsort((np.arange(num_classes), -sizes))
    while remainder > 0:
        moved = False
        for c in by_size:
            if remainder == 0:
                break
            if shares[c] < sizes[c]:
                shares[c] += 1
                remainder -= 1
                moved = True
        if not moved:  # total > n can't happen; guard against an infinite loop
            break
    return shares


def herding_select(rep: RepresentedDataset, tau: float) -> SelectionResult:
    """Greedy per-class mean matching in representation space.

    Each noisy class contributes its proportional share of round(tau*n);
    within a class, samples are added one at a time to keep the running
    mean of the picked set as close as possible to the class mean.
    """
    if not (0.0 < tau <= 1.0):
        raise ValueError("tau must lie in (0, 1]")
    base = rep.base
    X = rep.representations
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite representation value")
    total = round_half_up(tau * base.n)
    shares = _class_shares(base.noisy_labels, base.num_classes, total)
    scores = np.full(base.n, float(base.n))
    picked_ids = []
    for c in range(base.num_classes):
        rows = np.flatnonzero(base.noisy_labels == c)
        if rows.size == 0:
            warnings.warn(f"class {c} has no samples; skipped")
            continue
        if shares[c] == 0:
            continue
        rows = rows[np.argsort(base.ids[rows], kind="stable")]
        Xc = X[rows]
        picks = kernels.herding_greedy(Xc, Xc.mean(axis=0), int(shares[c]))
        chosen = rows[picks]
        scores[chosen] = np.arange(picks.size, dtype=np.float64)
        picked_ids.append(base.ids[chosen])
    selected = np.concatenate(picked_ids) if picked_ids else np.empty(0, dtype=np.int64)
    return SelectionResult(scores=scores, selected=selected, method="herding",
                           representation_kind=rep.kind, tau=float(tau))
