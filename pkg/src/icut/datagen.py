"""Synthetic benchmark generation for the orthogonal and permutation groups.

The orthogonal family draws features uniformly per coordinate and labels
by thresholding

    h(x) = k1*sin(c1*x.x) + k2*sin(c2*x.x)**2 + k3*cos(c3*x.x)

at zero; h depends on x only through x.x, so labels are invariant under
any rotation.  The permutation family uses

    h(x) = sum_{k=1..l} sum_i sin(x_i**k)

thresholded at the mean of h over the training split (the same threshold
is reused for the test split); h is a symmetric sum, so labels are
invariant under any coordinate permutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import LabeledDataset

GROUPS = ("orthogonal", "permutation")

ORTHOGONAL_PARAMS = (1.0, 2.0, 3.0, 2.0, 3.0, 4.0)  # (c1, c2, c3, k1, k2, k3)
PERMUTATION_POWERS = 5

# Per-coordinate feature supports.  The generating functions' band
# structure is scale sensitive, and these widths set the synthetic
# benchmarks' difficulty; see the package README for how they were chosen.
DEFAULT_RANGE = {"orthogonal": (-0.624, 0.624), "permutation": (-1.35, 1.35)}
DEFAULT_DIM = {"orthogonal": 100, "permutation": 5}


@dataclass(frozen=True)
class SyntheticSpec:
    group: str
    d: int = 0                      # 0 = group default
    n_train: int = 20000
    n_test: int = 5000
    feature_range: Optional[Tuple[float, float]] = None  # None = group default
    params: Tuple[float, ...] = ORTHOGONAL_PARAMS
    l: int = PERMUTATION_POWERS
    seed: int = 0

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"unknown group {self.group!r}")
        if self.d == 0:
            object.__setattr__(self, "d", DEFAULT_DIM[self.group])
        if self.feature_range is None:
            object.__setattr__(self, "feature_range", DEFAULT_RANGE[self.group])
        lo, hi = self.feature_range
        if not (lo < hi):
            raise ValueError("degenerate feature range")
        if self.d < 1 or self.n_train < 1 or self.n_test < 1:
            raise ValueError("d and split sizes must be positive")
        if self.group == "orthogonal" and len(self.params) != 6:
            raise ValueError("orthogonal params must be (c1, c2, c3, k1, k2, k3)")
        if self.group == "permutation" and self.l < 1:
            raise ValueError("l must be positive")

    @property
    def threshold_mode(self) -> str:
        return "zero" if self.group == "orthogonal" else "mean"


@dataclass(frozen=True)
class NoiseSpec:
    flip_probability: float
    num_classes: int = 2
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.flip_probability <= 1.0):
            raise ValueError("flip probability must lie in [0, 1]")
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")


def _h_orthogonal(X: np.ndarray, params) -> np.ndarray:
    c1, c2, c3, k1, k2, k3 = params
    s = np.einsum("ij,ij->i", X, X)
    return k1 * np.sin(c1 * s) + k2 * np.sin(c2 * s) ** 2 + k3 * np.cos(c3 * s)


def _h_permutation(X: np.ndarray, l: int) -> np.ndarray:
    out = np.zeros(X.shape[0])
    for k in range(1, l + 1):
        out += np.sin(X ** k).sum(axis=1)
    return out


def generating_function(spec: SyntheticSpec, X: np.ndarray) -> np.ndarray:
    """h(x) row-wise for the spec's group."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if spec.group == "orthogonal":
        return _h_orthogonal(X, spec.params)
    return _h_permutation(X, spec.l)


def generate_synthetic(spec: SyntheticSpec) -> Tuple[LabeledDataset, LabeledDataset]:
    """Deterministic (train, test) splits for the spec.

    Both splits are labeled by one function: the orthogonal threshold is
    zero, the permutation threshold is the train-split mean of h.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed) & (2**63 - 1), 11]))
    lo, hi = spec.feature_range
    total = spec.n_train + spec.n_test
    X = rng.uniform(lo, hi, size=(total, spec.d))
    h = generating_function(spec, X)
    threshold = 0.0 if spec.threshold_mode == "zero" else float(h[: spec.n_train].mean())
    y = (h >= threshold).astype(np.int64)

    def make(X_part, y_part):
        n = X_part.shape[0]
        return LabeledDataset(
            features=X_part,
            noisy_labels=y_part.copy(),
            num_classes=2,
            ids=np.arange(n, dtype=np.int64),
            true_labels=y_part,
        )

    train = make(X[: spec.n_train], y[: spec.n_train])
    test = make(X[spec.n_train :], y[spec.n_train :])
    return train, test


def haar_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """A Haar-uniform rotation from SO(d).

    QR of a standard normal matrix, columns sign-fixed by the diagonal of
    R for uniformity over O(d); one column is flipped when det = -1 to
    land in SO(d).
    """
    if d < 1:
        raise ValueError("d must be positive")
    A = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def apply_group_action(group: str, x: np.ndarray, seed) -> np.ndarray:
    """g . x for a group element drawn uniformly (identity included)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a nonempty vector")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if group == "orthogonal":
        return haar_rotation(x.size, rng) @ x
    if group == "permutation":
        return x[rng.permutation(x.size)]
    raise ValueError(f"unknown group {group!r}")


def inject_label_noise(dataset: LabeledDataset, noise: NoiseSpec) -> LabeledDataset:
    """Flip each true label w.p. p to a uniformly chosen different class."""
    if dataset.true_labels is None:
        raise ValueError("ground truth unavailable")
    C = noise.num_classes
    if dataset.num_classes > C:
        raise ValueError("noise spec covers fewer classes than the dataset")
    rng = np.random.default_rng(np.random.SeedSequence([int(noise.seed) & (2**63 - 1), 13]))
    n = dataset.n
    flips = rng.random(n) < noise.flip_probability
    offsets = rng.integers(1, C, size=n)
    noisy = np.where(flips, (dataset.true_labels + offsets) % C, dataset.true_labels)
    return LabeledDataset(
        features=dataset.features,
        noisy_labels=noisy.astype(np.int64),
        num_classes=C,
        ids=dataset.ids,
        true_labels=dataset.true_labels,
    )
