import numpy as np
import pytest

from limetree.blackbox import TableBlackBox
from limetree.bench import make_trial_domain


@pytest.fixture
def gray_domain_4():
    """Uniform gray 4x4 image split into a 2x2 grid (d=4)."""
    from limetree.domain import InterpretableDomain, build_grid_segmentation

    anchor = np.full((4, 4, 3), 128, dtype=np.uint8)
    seg = build_grid_segmentation(4, 4, 2, 2)
    return InterpretableDomain.for_image(anchor, seg)


@pytest.fixture
def domain_d2():
    return make_trial_domain(2, seed=11)


@pytest.fixture
def domain_d3():
    return make_trial_domain(3, seed=12)


def and_table_blackbox(domain=None):
    """d=2 table: class 1 wins only at [1,1] (the AND pattern)."""
    rows = [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    bb = TableBlackBox(rows)
    if domain is not None:
        bb = bb.bind_domain(domain)
    return bb


def bit0_table_blackbox(domain=None):
    """d=3 table: class 1 is argmax exactly when bit 0 is 0."""
    rows = [[0.15, 0.7, 0.15] if (i >> 2) & 1 == 0 else [0.6, 0.25, 0.15]
            for i in range(8)]
    bb = TableBlackBox(rows)
    if domain is not None:
        bb = bb.bind_domain(domain)
    return bb
