"""Max-margin linear binary classifier trained by sequential dual optimization.

Features are standardized to zero mean and unit variance with the training
statistics (population variance; zero-variance features keep std 1 so they
standardize to 0).  The soft-margin dual is optimized by iterating random
pairs of multipliers until no multiplier violates the KKT conditions beyond
``tol`` for ``max_passes`` consecutive sweeps.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from metael.learners.instances import BinaryInstance, design_matrix

__all__ = [
    "MarginModel",
    "train_margin",
    "predict_margin",
    "margin_score",
    "constant_accept_model",
]


@dataclass
class MarginModel:
    """Linear decision function in standardized feature space."""

    weights: np.ndarray
    bias: float
    means: np.ndarray
    stds: np.ndarray
    constant_accept: bool = False

    @property
    def feature_dim(self) -> int:
        return int(self.weights.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, MarginModel):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and self.bias == other.bias
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.stds, other.stds)
            and self.constant_accept == other.constant_accept
        )


def constant_accept_model(feature_dim: int) -> MarginModel:
    """Fallback used when a system's training data has a single class: the
    model accepts every input (weights 0, bias 1)."""
    return MarginModel(
        weights=np.zeros(feature_dim, dtype=np.float64),
        bias=1.0,
        means=np.zeros(feature_dim, dtype=np.float64),
        stds=np.ones(feature_dim, dtype=np.float64),
        constant_accept=True,
    )


def train_margin(
    data: Sequence[BinaryInstance],
    c: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 5,
    seed: int = 0,
) -> MarginModel:
    """Train the classifier; raises on single-class data."""
    X = design_matrix(data)
    y = np.asarray([1.0 if inst.y else -1.0 for inst in data], dtype=np.float64)
    if y.min() == y.max():
        raise ValueError("margin training needs both classes present")
    if c <= 0:
        raise ValueError("c must be positive")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds == 0.0, 1.0, stds)
    Xs = (X - means) / stds

    n = Xs.shape[0]
    rng = random.Random(seed)
    alphas = np.zeros(n, dtype=np.float64)
    alpha = [0.0] * n
    yl = y.tolist()
    w = np.zeros(Xs.shape[1], dtype=np.float64)
    b = 0.0
    diag = np.einsum("ij,ij->i", Xs, Xs).tolist()
    # decision values Xs @ w, maintained incrementally so the KKT scan is
    # O(1) per point instead of a dot product
    scores = np.zeros(n, dtype=np.float64)

    kernel_rows: dict[int, list[float]] = {}

    def kernel_row(i: int) -> list[float]:
        row = kernel_rows.get(i)
        if row is None:
            if len(kernel_rows) >= 512:
                kernel_rows.clear()
            row = (Xs @ Xs[i]).tolist()
            kernel_rows[i] = row
        return row

    def violators(after: int):
        """Indices past ``after`` violating the KKT conditions beyond tol,
        with their errors; valid until the next accepted update, since only
        updates move the optimizer state."""
        errors = (scores + b) - y
        mask = ((y * errors < -tol) & (alphas < c)) | ((y * errors > tol) & (alphas > 0))
        idx = np.nonzero(mask)[0]
        if after >= 0:
            idx = idx[idx > after]
        return idx.tolist(), errors

    passes = 0
    while passes < max_passes:
        num_changed = 0
        eligible, errors = violators(-1)
        ptr = 0
        while ptr < len(eligible):
            i = eligible[ptr]
            ptr += 1
            e_i = float(errors[i])
            j = rng.randrange(n - 1)
            if j >= i:
                j += 1
            e_j = float(errors[j])
            a_i_old = alpha[i]
            a_j_old = alpha[j]
            if yl[i] != yl[j]:
                lo = max(0.0, a_j_old - a_i_old)
                hi = min(c, c + a_j_old - a_i_old)
            else:
                lo = max(0.0, a_i_old + a_j_old - c)
                hi = min(c, a_i_old + a_j_old)
            if lo == hi:
                continue
            k_ij = kernel_row(i)[j]
            eta = 2.0 * k_ij - diag[i] - diag[j]
            if eta >= 0:
                continue
            a_j = a_j_old - yl[j] * (e_i - e_j) / eta
            a_j = min(hi, max(lo, a_j))
            if abs(a_j - a_j_old) < 1e-5:
                continue
            a_i = a_i_old + yl[i] * yl[j] * (a_j_old - a_j)
            b1 = b - e_i - yl[i] * (a_i - a_i_old) * diag[i] - yl[j] * (a_j - a_j_old) * k_ij
            b2 = b - e_j - yl[i] * (a_i - a_i_old) * k_ij - yl[j] * (a_j - a_j_old) * diag[j]
            if 0.0 < a_i < c:
                b = b1
            elif 0.0 < a_j < c:
                b = b2
            else:
                b = (b1 + b2) / 2.0
            delta_w = yl[i] * (a_i - a_i_old) * Xs[i] + yl[j] * (a_j - a_j_old) * Xs[j]
            w += delta_w
            scores += Xs @ delta_w
            alpha[i] = a_i
            alpha[j] = a_j
            alphas[i] = a_i
            alphas[j] = a_j
            num_changed += 1
            eligible, errors = violators(i)
            ptr = 0
        passes = passes + 1 if num_changed == 0 else 0

    return MarginModel(weights=w, bias=float(b), means=means, stds=stds)


def margin_score(model: MarginModel, x) -> float:
    """Signed distance proxy: dot(weights, standardized x) + bias."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.feature_dim,):
        raise ValueError(f"expected a vector of length {model.feature_dim}, got shape {x.shape}")
    return float(model.weights @ ((x - model.means) / model.stds) + model.bias)


def predict_margin(model: MarginModel, x) -> bool:
    """Boundary convention: a score of exactly 0 is a positive prediction."""
    return margin_score(model, x) >= 0.0
