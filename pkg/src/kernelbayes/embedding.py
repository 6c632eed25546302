"""Weighted-sample embeddings of distributions in an RKHS.

An Embedding represents sum_i w_i * phi(y_i) for points y_i and signed
weights w_i. Inner products, distances, and expectations of kernel-section
functions reduce to Gram-matrix contractions. compute_beta maps a weighted
prior embedding to weights over a joint sample via a regularized Gram solve;
thresholding those weights at zero is what downstream estimators consume.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateBeliefError, InputError
from .kernels import KernelSpec, as_points
from .linalg import solve_spd


@dataclass(frozen=True)
class Embedding:
    """A weighted point sample standing in for an RKHS element."""

    points: np.ndarray
    weights: np.ndarray
    kernel: KernelSpec

    def __post_init__(self):
        pts = as_points(self.points)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise InputError(
                f"{pts.shape[0]} points but {w.shape[0]} weights"
            )
        if not np.all(np.isfinite(w)):
            raise InputError("weights contain non-finite values")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def _check_compatible(self, other: "Embedding"):
        if self.kernel != other.kernel:
            raise InputError(
                f"embeddings use different kernels: {self.kernel} vs {other.kernel}"
            )
        if self.points.shape[1] != other.points.shape[1]:
            raise InputError("embeddings live on different point dimensions")

    def inner(self, other: "Embedding") -> float:
        """<m1, m2> = w1' G w2 with G the cross-Gram of the two point sets."""
        self._check_compatible(other)
        g = self.kernel.gram(self.points, other.points).entries
        return float(self.weights @ g @ other.weights)

    def rkhs_distance(self, other: "Embedding") -> float:
        """||m1 - m2||; the squared form is clamped at 0 before the sqrt."""
        sq = self.inner(self) - 2.0 * self.inner(other) + other.inner(other)
        return float(np.sqrt(max(sq, 0.0)))

    def expectation(self, h: Callable) -> float:
        """sum_i w_i h(y_i): the embedded expectation of h when h lies in the RKHS."""
        vals = np.array([float(h(p)) for p in self.points])
        if not np.all(np.isfinite(vals)):
            raise InputError("h produced non-finite values on the support points")
        return float(self.weights @ vals)

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "kernel": self.kernel.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Embedding":
        if not isinstance(doc, dict):
            raise InputError("embedding document must be a dict")
        missing = {"points", "weights", "kernel"} - set(doc)
        if missing:
            raise InputError(f"embedding document missing fields: {sorted(missing)}")
        extra = set(doc) - {"points", "weights", "kernel"}
        if extra:
            raise InputError(f"unknown embedding fields: {sorted(extra)}")
        return cls(
            points=np.asarray(doc["points"], dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
            kernel=KernelSpec.from_dict(doc["kernel"]),
        )


def embed_empirical(points, kernel: KernelSpec) -> Embedding:
    """Uniform-weight embedding (1/n) sum_i phi(y_i) of a plain sample."""
    pts = as_points(points)
    n = pts.shape[0]
    return Embedding(points=pts, weights=np.full(n, 1.0 / n), kernel=kernel)


@dataclass(frozen=True)
class BetaWeights:
    """Signed prior-to-joint weights plus their nonnegative thresholding."""

    raw: np.ndarray
    thresholded: np.ndarray = field(init=False)

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float).reshape(-1)
        if raw.size == 0:
            raise InputError("empty weight vector")
        if not np.all(np.isfinite(raw)):
            raise InputError("weights contain non-finite values")
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "thresholded", np.maximum(raw, 0.0))

    @property
    def negative_mass(self) -> float:
        """sum of |negative part|; bounds the RKHS perturbation of thresholding."""
        return float(np.sum(self.thresholded - self.raw))

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.thresholded > 0.0)


def compute_beta(gram_y, gram_prior, prior_weights, lam: float) -> BetaWeights:
    """Weights carrying a prior embedding onto a joint sample's state points.

    Solves (G_Y + n*lam*I) beta = G_tilde @ prior_weights, where G_Y is the
    n x n Gram of the sample states and G_tilde the n x l cross-Gram against
    the prior's support points.
    """
    g = np.asarray(gram_y, dtype=float)
    gt = np.asarray(gram_prior, dtype=float)
    alpha = np.asarray(prior_weights, dtype=float).reshape(-1)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InputError(f"G_Y must be square, got shape {g.shape}")
    n = g.shape[0]
    if gt.shape[0] != n:
        raise InputError(f"cross-Gram has {gt.shape[0]} rows, expected {n}")
    if gt.shape[1] != alpha.shape[0]:
        raise InputError(
            f"cross-Gram has {gt.shape[1]} columns but prior has {alpha.shape[0]} weights"
        )
    if not (lam > 0 and np.isfinite(lam)):
        raise InputError(f"lam must be finite and > 0, got {lam}")
    system = g + (n * lam) * np.eye(n)
    beta = solve_spd(system, gt @ alpha)
    return BetaWeights(raw=beta)


def renormalize(weights) -> np.ndarray:
    """Scale a nonnegative weight vector to unit sum."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size == 0:
        raise InputError("empty weight vector")
    if not np.all(np.isfinite(w)):
        raise InputError("weights contain non-finite values")
    if np.any(w < 0):
        raise InputError("renormalize expects nonnegative weights")
    total = float(np.sum(w))
    if total <= 0.0:
        raise DegenerateBeliefError("all weights are zero; nothing to renormalize")
    return w / total
