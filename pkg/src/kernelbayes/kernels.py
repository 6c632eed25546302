"""Kernels, Gram matrices, and bandwidth selection.

Two kernels are supported: the Gaussian RBF exp(-||a-b||^2 / (2*bandwidth^2))
used throughout, and the linear kernel <a, b> kept for exact finite-dimensional
cross-checks. Gaussian Gram entries are assembled from explicit coordinate
differences (blocked over rows) rather than the usual norm expansion, so that
gram(k, A, A) is exactly symmetric and every entry is bit-identical to eval on
the same pair of points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InputError

_GRAM_BLOCK = 512

VARIANTS = ("gaussian", "linear")


def as_points(points) -> np.ndarray:
    """Coerce to a float (n, d) array; 1-d input is treated as n scalars."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InputError(f"expected a nonempty (n, d) point array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("points contain non-finite values")
    return arr


def as_point(point) -> np.ndarray:
    arr = np.asarray(point, dtype=float).reshape(-1)
    if arr.size == 0:
        raise InputError("empty point")
    if not np.all(np.isfinite(arr)):
        raise InputError("point contains non-finite values")
    return arr


@dataclass(frozen=True)
class KernelSpec:
    """A positive-definite kernel identified by variant and parameters."""

    variant: str
    bandwidth: float | None = None

    def __post_init__(self):
        if self.variant == "gaussian":
            if self.bandwidth is None:
                raise InputError("gaussian kernel requires a bandwidth")
            object.__setattr__(self, "bandwidth", float(self.bandwidth))
            if not (self.bandwidth > 0 and np.isfinite(self.bandwidth)):
                raise InputError(f"bandwidth must be finite and > 0, got {self.bandwidth}")
        elif self.variant == "linear":
            if self.bandwidth is not None:
                raise InputError("linear kernel takes no bandwidth")
        else:
            raise InputError(f"unknown kernel variant {self.variant!r}")

    def eval(self, a, b) -> float:
        """k(a, b) for two single points. Shares the gram code path exactly."""
        a = as_point(a)
        b = as_point(b)
        if a.shape != b.shape:
            raise InputError(f"point dimensions differ: {a.shape[0]} vs {b.shape[0]}")
        return float(self.gram(a[None, :], b[None, :]).entries[0, 0])

    def gram(self, left, right) -> "GramMatrix":
        left = as_points(left)
        right = as_points(right)
        if left.shape[1] != right.shape[1]:
            raise InputError(
                f"point dimensions differ: {left.shape[1]} vs {right.shape[1]}"
            )
        if self.variant == "linear":
            entries = np.einsum("ik,jk->ij", left, right)
        else:
            entries = np.empty((left.shape[0], right.shape[0]))
            denom = 2.0 * self.bandwidth * self.bandwidth
            # blocked over rows to bound the (block, m, d) difference temporary
            for start in range(0, left.shape[0], _GRAM_BLOCK):
                block = left[start : start + _GRAM_BLOCK]
                diff = block[:, None, :] - right[None, :, :]
                sq = np.einsum("ijk,ijk->ij", diff, diff)
                entries[start : start + block.shape[0]] = np.exp(-sq / denom)
        return GramMatrix(entries=entries, left_points=left, right_points=right)

    def to_dict(self) -> dict:
        doc = {"variant": self.variant}
        if self.variant == "gaussian":
            doc["bandwidth"] = self.bandwidth
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "KernelSpec":
        if not isinstance(doc, dict) or "variant" not in doc:
            raise InputError("kernel document must be a dict with a 'variant' field")
        extra = set(doc) - {"variant", "bandwidth"}
        if extra:
            raise InputError(f"unknown kernel fields: {sorted(extra)}")
        return cls(variant=doc["variant"], bandwidth=doc.get("bandwidth"))


def gaussian(bandwidth: float) -> KernelSpec:
    return KernelSpec("gaussian", bandwidth)


def linear() -> KernelSpec:
    return KernelSpec("linear")


@dataclass(frozen=True)
class GramMatrix:
    """Kernel evaluations between two point sets, with the points attached."""

    entries: np.ndarray
    left_points: np.ndarray
    right_points: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


def median_heuristic(points) -> float:
    """Median of pairwise Euclidean distances over unordered distinct pairs.

    Requires at least two points; a zero median (e.g. all points identical)
    is rejected because it cannot serve as a bandwidth.
    """
    pts = as_points(points)
    if pts.shape[0] < 2:
        raise InputError("median heuristic needs at least 2 points")
    med = float(np.median(pdist(pts)))
    if not med > 0:
        raise InputError("median pairwise distance is zero; bandwidth undefined")
    return med
