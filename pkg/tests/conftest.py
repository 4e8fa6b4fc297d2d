"""Shared builders for the test suite.

Most tests construct small problem instances inline; the builders here are
the ones reused across files (the reference quasi-periodic map and the two
exactly-solvable fixtures whose parameterizations are known in closed form).
"""

import numpy as np
import pytest

from paratori.fourier import FourierSeries
from paratori.mapdata import TaylorFourierMap

GOLDEN = (np.sqrt(5) - 1) / 2


def one_mode(avg, amp, dim, cut, axis=0):
    """avg + amp*cos(2 pi theta_axis) as a series on the dim-torus."""
    mode = tuple(1 if a == axis else 0 for a in range(dim))
    f = FourierSeries.zero(dim, cut) + avg
    if amp:
        f = f + FourierSeries.from_modes({mode: 0.5 * amp}, dim, cut)
    return f


def reference_map(cut=32):
    """Quasi-periodically forced parabolic map used throughout.

    x' = x + c(theta) y,  y' = y + a(theta) x^2,  theta' = theta + omega + x
    with c = 1 + 0.1 cos(2 pi theta), a = 6 + cos(2 pi theta).
    """
    c = one_mode(1.0, 0.1, 1, cut)
    a2 = one_mode(6.0, 1.0, 1, cut)
    d1 = FourierSeries.zero(1, cut) + 1.0
    return TaylorFourierMap("map", 1, 0, cut, (GOLDEN,),
                            {(0, 1): c}, {(2, 0): a2}, [{(1, 0): d1}],
                            k=2, p=1)


def reference_flow(cut=8):
    """Same leading data as an ODE with one extra driving phase.

    theta lives on a 2-torus hull: one dynamic angle (frequency omega at
    leading order) plus one driven phase rotating at sqrt(2).
    """
    c = FourierSeries.zero(2, cut) + 1.0 \
        + FourierSeries.from_modes({(1, 0): 0.05, (0, 1): 0.03}, 2, cut)
    a2 = FourierSeries.zero(2, cut) + 6.0 \
        + FourierSeries.from_modes({(1, 0): 0.5, (1, 1): 0.2}, 2, cut)
    d1 = FourierSeries.zero(2, cut) + 1.0 \
        + FourierSeries.from_modes({(0, 1): 0.1}, 2, cut)
    return TaylorFourierMap("field", 1, 1, cut, (GOLDEN, np.sqrt(2)),
                            {(0, 1): c}, {(2, 0): a2}, [{(1, 0): d1}],
                            k=2, p=1)


def exact_map(cut=4):
    """Map whose stable pair is polynomial: K = (u^2, -2u^3 + u^4, theta - u)
    with inner contraction u - u^2.  Every tail coefficient beyond these
    vanishes, so the solver output can be checked exactly."""
    return TaylorFourierMap(
        "map", 1, 0, cut, (GOLDEN,),
        {(0, 1): 1.0},
        {(2, 0): 6.0, (1, 1): 5.0, (3, 0): 3.0, (2, 1): 2.0, (4, 0): -1.0},
        [{(1, 0): 1.0}], k=2, p=1)


def exact_flow(cut=4):
    """Field with polynomial stable pair K = (u^2, -2u^3, theta - u) and
    inner velocity -u^2: xdot = y, ydot = 6 x^2, thetadot = omega + x."""
    return TaylorFourierMap(
        "field", 1, 0, cut, (GOLDEN,),
        {(0, 1): 1.0},
        {(2, 0): 6.0},
        [{(1, 0): 1.0}], k=2, p=1)


def shear_example(cut=4):
    """Vertical-shear field from the worked example: xdot = 2y,
    ydot = -xy, thetadot = omega + 3y.  Stable pair is again polynomial."""
    return TaylorFourierMap(
        "field", 1, 0, cut, (GOLDEN,),
        {(0, 1): 2.0},
        {(1, 1): -1.0},
        [{(0, 1): 3.0}])


@pytest.fixture(scope="session")
def solved_reference():
    """Reference map solved once to order 8 with snapshots; reused by the
    slope, comparison and probe tests to keep the suite fast.  Returns
    (map, final_pair, history) where history[i] has invariance order 2 + i."""
    from paratori.map_solver import solve_to_order
    mp = reference_map()
    pair, history = solve_to_order(mp, 8, snapshots=True)
    return mp, pair, history
