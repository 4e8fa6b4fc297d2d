"""Order-by-order construction of invariant-manifold pairs for reduced maps."""

import numpy as np
import pytest

from paratori.errors import (NonPositiveLeadingCoefficient,
                             SmallDivisorUnderflow, TruncationTooLow)
from paratori.fourier import FourierSeries
from paratori.map_solver import (default_trunc, init_order2,
                                 invert_reduced_map, solve_to_order)
from paratori.mapdata import TaylorFourierMap
from paratori.pairs import compare_pairs, residual_jets, residual_report

from conftest import GOLDEN, exact_map, one_mode, reference_map


def residual_below_contract(data, pair):
    """Largest invariance-defect coefficient below the contract orders."""
    gx, gy, gt = residual_jets(data, pair)
    ox, oy, ot = pair.contract_orders()
    worst = 0.0
    for jet, lead in [(gx, ox), (gy, oy)] + [(g, ot) for g in gt]:
        if lead is None:
            continue
        for n in jet.orders():
            if n < lead:
                worst = max(worst, jet.coefficient(n).coeff_norm())
    return worst


def test_exact_fixture_is_polynomial():
    mp = exact_map()
    pair = solve_to_order(mp, 6)
    # closed-form pair: K = (u^2, -2u^3 + u^4, theta - u), inner u - u^2
    assert abs(pair.y_coeff_avg(3) + 2) < 1e-12
    assert abs(pair.y_coeff_avg(4) - 1) < 1e-12
    assert abs(pair.inner.coeff(2) + 1) < 1e-14
    assert abs(pair.inner.coeff(3)) < 1e-14
    assert abs(pair.tail_coeff_avg(0, 1) + 1) < 1e-12
    for n in pair.x.orders():
        if n != 2:
            assert pair.x.coefficient(n).coeff_norm() < 1e-11, n
    for n in pair.y.orders():
        if n not in (3, 4):
            assert pair.y.coefficient(n).coeff_norm() < 1e-11, n
    assert residual_below_contract(mp, pair) < 1e-11


def test_degenerate_step_solves_cleanly():
    # at order n = k the 2x2 block is singular; the solvable bordered system
    # must carry a vanishing determinant and an exact least-squares solution
    mp = exact_map()
    pair = solve_to_order(mp, 6)
    diag = pair.diagnostics["degenerate_step"]
    assert diag["order"] == pair.k
    assert abs(diag["det"]) <= 1e-12 * max(1.0, diag["det_scale"])
    assert diag["lstsq_defect"] <= 1e-12


def test_closed_form_seeds():
    rng = np.random.default_rng(42)
    for k in (2, 3, 4):
        p = 1 if k == 2 else 2
        cbar = float(rng.uniform(0.5, 3.0))
        abar = float(rng.uniform(0.5, 5.0))
        dbar = float(rng.uniform(-2.0, 2.0)) or 1.0
        mp = TaylorFourierMap(
            "map", 1, 0, 4, (GOLDEN,),
            {(0, 1): one_mode(cbar, 0.05, 1, 4)},
            {(k, 0): one_mode(abar, 0.1, 1, 4)},
            [{(p, 0): one_mode(dbar, 0.02, 1, 4)}], k=k, p=p)
        pair = init_order2(mp)
        r_k = -np.sqrt(cbar * abar / (2 * (k + 1)))
        assert abs(pair.inner.coeff(k) - r_k) < 1e-12 * abs(r_k)
        eta = 2 * r_k / cbar
        assert abs(pair.y_coeff_avg(k + 1) - eta) < 1e-12 * abs(eta)
        lead_w = 2 * p - k + 1
        w = dbar / (lead_w * r_k)
        assert abs(pair.tails[0].coefficient(lead_w).average() - w) < 1e-12 * abs(w)


def test_reference_map_orders_and_slopes(solved_reference):
    mp, pair, history = solved_reference
    assert pair.order == 8
    assert history[0].order == 2 and history[-1].order == 8
    four = history[2]
    assert four.order == 4
    rep = residual_report(mp, four)
    by_name = {c["name"]: c for c in rep.components}
    assert abs(by_name["x"]["slope"] - 6) < 0.15
    assert abs(by_name["y"]["slope"] - 7) < 0.15
    assert abs(by_name["theta_0"]["slope"] - 5) < 0.15
    for c in rep.components:
        assert c["annihilated_max"] < 1e-9 * four.size()


def test_successive_orders_differ_at_the_right_place(solved_reference):
    mp, pair, history = solved_reference
    a, b = history[1], history[2]  # orders 3 and 4
    diff = compare_pairs(a, b)
    # raising the order by one may only touch coefficients above
    # (n+1, n+k, n+2p-k) = (4, 5, 3)
    assert diff["x"] is None or diff["x"] >= 4
    assert diff["y"] is None or diff["y"] >= 5
    assert diff["theta"][0] is None or diff["theta"][0] >= 3
    same = compare_pairs(a, a)
    assert all(v is None for v in (same["x"], same["y"], same["inner"]))


def test_unstable_branch_against_original_map():
    mp = reference_map(cut=16)
    pair = solve_to_order(mp, 5, branch="unstable")
    assert abs(pair.inner.coeff(2) - 1.0) < 1e-12
    assert residual_below_contract(mp, pair) < 1e-9 * pair.size()


def test_truncation_guard():
    mp = exact_map()
    pair = solve_to_order(mp, 3, trunc=7)
    with pytest.raises(TruncationTooLow):
        while pair.order < 12:
            from paratori.map_solver import extend_order
            extend_order(mp, pair)


def test_resonant_frequency_raises():
    mp = reference_map(cut=8)
    mp = TaylorFourierMap("map", 1, 0, 8, (0.5,), mp.x_terms, mp.y_terms,
                          mp.theta_terms, k=2, p=1)
    with pytest.raises(SmallDivisorUnderflow):
        solve_to_order(mp, 3)


def test_wrong_sign_leading_coefficient():
    mp = TaylorFourierMap("map", 1, 0, 4, (GOLDEN,),
                          {(0, 1): 1.0}, {(2, 0): -6.0}, [{(1, 0): 1.0}],
                          k=2, p=1)
    with pytest.raises(NonPositiveLeadingCoefficient):
        init_order2(mp)


def test_inverse_of_reduced_map():
    mp = reference_map(cut=16)
    inv = invert_reduced_map(mp, 6)
    errs = []
    for s in (1.0, 0.5, 0.25):
        x, y = 0.01 * s, 0.004 * s
        th = np.array([0.3])
        X, Y, TH = mp.eval(x, y, th)
        xb, yb, thb = inv.eval(X, Y, TH)
        errs.append(max(abs(xb - x), abs(yb - y), abs(thb[0] - th[0])))
    # round-trip error decays at the truncation order of the inverse
    rate = np.log2(errs[0] / errs[-1]) / 2
    assert rate > 6.5
    assert errs[-1] < 1e-11


def test_default_trunc_bounds_tail():
    mp = reference_map(cut=8)
    pair = solve_to_order(mp, 4)
    assert pair.trunc == default_trunc(4, 2, 1)
    assert pair.x.max_order <= pair.trunc
    assert pair.y.max_order <= pair.trunc
