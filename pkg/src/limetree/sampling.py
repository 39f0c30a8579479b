"""Training-sample generation and proximity weighting.

Weights are the exponential kernel applied to the cosine distance from the
all-ones reference point. Enumeration replaces random sampling whenever the
full domain fits in the budget, which is also what makes the complete-tree
guarantees reachable.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError

DEFAULT_KERNEL_WIDTH = 0.25
ENUMERATION_CAP = 20        # hard cap on d for any full enumeration
ENUMERATION_BUDGET = 4096   # prefer enumeration when 2^d fits in this


def enumerate_domain(d, cap=ENUMERATION_CAP):
    """All 2^d binary points in ascending binary order, as a (2^d, d) array."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > cap:
        raise CapacityError("d=%d exceeds enumeration cap %d" % (d, cap))
    idx = np.arange(2 ** d, dtype=np.int64)
    return ((idx[:, None] >> np.arange(d - 1, -1, -1)) & 1).astype(np.uint8)


def sample_domain(d, n, seed):
    """n i.i.d. uniform points over {0,1}^d (with replacement), plus the
    all-ones reference when it was not drawn."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, 2, size=(n, d), dtype=np.int64).astype(np.uint8)
    if not np.any(pts.sum(axis=1) == d):
        pts = np.vstack([pts, np.ones((1, d), dtype=np.uint8)])
    return pts


def cosine_distance(a, b):
    """1 - cos(a, b); all-zero vectors are defined to be at distance 1."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        return 1.0
    if np.array_equal(a, b):
        return 0.0
    # float rounding can push the similarity a hair past 1
    return min(1.0, max(0.0, 1.0 - float(a @ b) / (na * nb)))


def exponential_kernel(s, w=DEFAULT_KERNEL_WIDTH):
    """sqrt(exp(-(s/w)^2)); maps distance 0 to weight 1."""
    if w <= 0:
        raise ValueError("kernel width must be positive")
    if s < 0:
        raise ValueError("distance must be non-negative")
    return math.sqrt(math.exp(-((s / w) ** 2)))


@dataclass(frozen=True)
class WeightedSample:
    points: np.ndarray      # (n, d) uint8
    weights: np.ndarray     # (n,) floats in (0, 1]
    reference: np.ndarray   # (d,) uint8
    kernel_width: float


def build_weighted_sample(points, kernel_width=DEFAULT_KERNEL_WIDTH, reference=None):
    points = np.asarray(points, dtype=np.uint8)
    d = points.shape[1]
    if reference is None:
        reference = np.ones(d, dtype=np.uint8)
    weights = np.array([
        exponential_kernel(cosine_distance(reference, p), kernel_width)
        for p in points
    ])
    return WeightedSample(points=points, weights=weights,
                          reference=np.asarray(reference, dtype=np.uint8),
                          kernel_width=kernel_width)


def enumeration_sample(d, kernel_width=DEFAULT_KERNEL_WIDTH, budget=ENUMERATION_BUDGET):
    """Full enumeration as a weighted sample; the preferred training set."""
    if 2 ** d > budget:
        raise CapacityError("2^%d exceeds enumeration budget %d" % (d, budget))
    return build_weighted_sample(enumerate_domain(d), kernel_width)
