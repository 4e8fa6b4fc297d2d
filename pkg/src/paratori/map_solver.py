"""Order-by-order construction of invariant manifolds of parabolic tori for
maps in reduced form.

The input map must have the triangular structure
    x' = x + c(theta) y
    y' = y + a(theta) x^k + (admissible tail)
    theta' = theta + omega + d(theta) x^p + (admissible tail)
with mean(c) > 0 and mean(a) > 0.  The parameterization is sought as
    K(u, theta) = (u^2 + ..., K_y u^{k+1} + ..., theta + W(u, theta)),
conjugating the map to the polynomial normal form
    u' = u + r_k u^k (+ r_{2k-1} u^{2k-1}),   theta' = theta + omega.

Each extension step solves a small linear system for the new average
(theta-independent) coefficients, then one cohomological equation per
component for the oscillatory parts.  The system is singular exactly once,
at step n = k, where the normal-form correction r_{2k-1} restores
solvability and the new average x-coefficient is fixed to zero by
convention.
"""

import numpy as np

from .errors import (
    NonPositiveLeadingCoefficient,
    SingularSystem,
    TruncationTooLow,
    ZeroLeadingCoefficient,
)
from .fourier import FourierSeries, diophantine_margin, solve_sd_flow, solve_sd_map
from .jets import TFJet, UPoly
from .pairs import ManifoldPair, residual_jets


def _branch_sign(branch):
    assert branch in ("stable", "unstable")
    return -1.0 if branch == "stable" else 1.0


def _sd_solver(data, sd_floor):
    """Cohomological-equation solver matching the kind of the data."""
    freqs = np.asarray(data.freqs, dtype=float)
    if data.kind == "map":
        return lambda h: solve_sd_map(h, freqs, sd_floor)
    return lambda h: solve_sd_flow(h, freqs, sd_floor)


def _leading_averages(mp):
    cbar = mp.shear().average()
    abar = mp.coefficient_y((mp.k, 0)).average()
    if cbar == 0.0 or abar == 0.0:
        raise ZeroLeadingCoefficient(
            "mean shear %.3e, mean leading coefficient %.3e" % (cbar, abar)
        )
    if cbar < 0.0 or abar < 0.0:
        raise NonPositiveLeadingCoefficient(
            "need positive means: shear %.3e, leading %.3e" % (cbar, abar)
        )
    return cbar, abar


def default_trunc(n_target, k, p):
    return n_target + 2 * max(k, p if p is not None else 1)


def init_order2(mp, branch="stable", trunc=None, sd_floor=1e-12, assert_tol=1e-9):
    """Seed pair satisfying the invariance contract at order 2.

    The averages come from closed forms (the square-root balance between the
    shear and the leading coefficient); the oscillatory parts solve one
    cohomological equation per component.  Works for maps and for fields —
    the closed forms are identical with the normal-form polynomial read as a
    step map or as a velocity.
    """
    mp.validate_reduced()
    k, p, d = mp.k, mp.p, mp.d
    dim, cut = mp.dim, mp.cut
    if trunc is None:
        trunc = default_trunc(2, k, p)
    cbar, abar = _leading_averages(mp)
    sign = _branch_sign(branch)
    r_k = sign * np.sqrt(cbar * abar / (2.0 * (k + 1)))
    eta = 2.0 * r_k / cbar
    lead_w = 2 * p - k + 1 if d else None

    x = TFJet(dim, cut, trunc, {2: 1.0})
    y = TFJet(dim, cut, trunc, {k + 1: eta})
    tails = []
    for a in range(d):
        dbar = mp.coefficient_theta(a, (p, 0)).average()
        tails.append(TFJet(dim, cut, trunc, {lead_w: dbar / (lead_w * r_k)}))
    if mp.kind == "map":
        inner = UPoly({1: 1.0, k: r_k}, trunc)
    else:
        inner = UPoly({k: r_k}, trunc)

    pair = ManifoldPair(
        mp.kind, "power", branch, cut, trunc, 2, k, p, mp.freqs, d, mp.drive,
        x, y, tails, inner,
        diagnostics={
            "margin": diophantine_margin(mp.freqs, cut, mp.kind if mp.kind == "map" else "flow")
            if dim else (float("inf"), ()),
        },
    )

    # oscillatory completion at orders (k+1, 2k, 2p)
    if dim:
        sd = _sd_solver(mp, sd_floor)
        gx, gy, gt = residual_jets(mp, pair)
        pair.x.add_to_coefficient(k + 1, sd(gx.coefficient(k + 1).oscillatory()))
        pair.y.add_to_coefficient(2 * k, sd(gy.coefficient(2 * k).oscillatory()))
        for a in range(d):
            pair.tails[a].add_to_coefficient(
                2 * p, sd(gt[a].coefficient(2 * p).oscillatory()))

    _assert_contract(mp, pair, assert_tol)
    return pair


def _assert_contract(mp, pair, tol):
    gx, gy, gt = residual_jets(mp, pair)
    ox, oy, ot = pair.contract_orders()
    scale = pair.size()
    for jet, lead in [(gx, ox), (gy, oy)] + [(g, ot) for g in gt]:
        for n in jet.orders():
            if n < lead:
                defect = jet.coefficient(n).coeff_norm()
                assert defect <= tol * scale, (
                    "invariance defect %.3e at order %d (leading %d)" % (defect, n, lead))


def extend_order(mp, pair, sd_floor=1e-12, assert_tol=1e-9):
    """One induction step: raise the invariance order of the pair by one."""
    n = pair.order
    k, p, d = pair.k, pair.p, pair.d
    dim = pair.dim
    max_extract = n + 2 * k - 1 if d == 0 else max(n + 2 * k - 1, n + 2 * p - 1)
    if max_extract > pair.trunc:
        raise TruncationTooLow(
            "step %d needs order %d, truncation is %d" % (n, max_extract, pair.trunc))

    r_k = pair.inner.coeff(k)
    cbar = mp.shear().average()
    abar = mp.coefficient_y((k, 0)).average()
    eta_lead = pair.y.coefficient(k + 1).average()
    lead_w = 2 * p - k + 1 if d else None

    gx, gy, gt = residual_jets(mp, pair)
    gxb = gx.coefficient(n + k).average()
    gyb = gy.coefficient(n + 2 * k - 1).average()
    gtb = [gt[a].coefficient(n + 2 * p - 1).average() for a in range(d)]

    if n != k:
        mat = np.array([
            [-(n + 1) * r_k, cbar],
            [k * abar, -(n + k) * r_k],
        ])
        det = float(np.linalg.det(mat))
        det_scale = float(np.prod(np.linalg.norm(mat, axis=1)))
        if abs(det) <= 1e-12 * det_scale:
            raise SingularSystem("step %d unexpectedly singular" % n)
        xi, eta = np.linalg.solve(mat, np.array([-gxb, -gyb]))
        rho = 0.0
    else:
        rho = (2 * k * r_k * gxb + cbar * gyb) / (2.0 * (3 * k + 1) * r_k)
        xi = 0.0
        eta = (-gxb + 2.0 * rho) / cbar
        # record that the full system is singular but consistent
        cols = 2 + d
        mat = np.zeros((cols, cols))
        rhs = np.zeros(cols)
        mat[0, :2] = [-(n + 1) * r_k, cbar]
        rhs[0] = -gxb + 2.0 * rho
        mat[1, :2] = [k * abar, -(n + k) * r_k]
        rhs[1] = -gyb + (k + 1) * eta_lead * rho
        sol_check = [xi, eta]
        for a in range(d):
            dbar = mp.coefficient_theta(a, (p, 0)).average()
            w_lead = pair.tails[a].coefficient(lead_w).average()
            mat[2 + a, 0] = p * dbar
            mat[2 + a, 2 + a] = -(n + 2 * p - k) * r_k
            rhs[2 + a] = -gtb[a] + lead_w * w_lead * rho
            sol_check.append((gtb[a] + p * dbar * xi - lead_w * w_lead * rho)
                             / ((n + 2 * p - k) * r_k))
        det = float(np.linalg.det(mat))
        det_scale = float(np.prod(np.linalg.norm(mat, axis=1)))
        lsq = np.linalg.lstsq(mat, rhs, rcond=None)[0]
        defect = float(np.linalg.norm(mat @ lsq - rhs))
        defect_rel = defect / max(1.0, float(np.linalg.norm(rhs)))
        pair.diagnostics["degenerate_step"] = {
            "order": n,
            "det": det,
            "det_scale": det_scale,
            "lstsq_defect": defect_rel,
            "normal_form_coeff": float(rho),
        }

    ws = []
    for a in range(d):
        dbar = mp.coefficient_theta(a, (p, 0)).average()
        w_lead = pair.tails[a].coefficient(lead_w).average()
        ws.append((gtb[a] + p * dbar * xi - lead_w * w_lead * rho)
                  / ((n + 2 * p - k) * r_k))

    if xi != 0.0:
        pair.x.add_to_coefficient(n + 1, xi)
    pair.y.add_to_coefficient(n + k, eta)
    for a in range(d):
        pair.tails[a].add_to_coefficient(n + 2 * p - k, ws[a])
    if rho != 0.0:
        pair.inner = pair.inner + UPoly({n + k - 1: rho}, pair.inner.trunc)

    # oscillatory phase: one cohomological solve per component
    if dim:
        sd = _sd_solver(mp, sd_floor)
        gx, gy, gt = residual_jets(mp, pair)
        pair.x.add_to_coefficient(n + k, sd(gx.coefficient(n + k).oscillatory()))
        pair.y.add_to_coefficient(
            n + 2 * k - 1, sd(gy.coefficient(n + 2 * k - 1).oscillatory()))
        for a in range(d):
            pair.tails[a].add_to_coefficient(
                n + 2 * p - 1, sd(gt[a].coefficient(n + 2 * p - 1).oscillatory()))

    pair.order = n + 1
    _assert_contract(mp, pair, assert_tol)
    return pair


def solve_to_order(mp, n_target, branch="stable", trunc=None, sd_floor=1e-12,
                   assert_tol=1e-9, snapshots=False):
    """Construct the pair with invariance order ``n_target``.

    With ``snapshots`` the list of intermediate pairs (one per order, each an
    independent copy) is returned alongside the final pair.
    """
    assert n_target >= 2
    if trunc is None:
        trunc = default_trunc(n_target, mp.k, mp.p)
    pair = init_order2(mp, branch, trunc, sd_floor, assert_tol)
    history = [pair.copy()] if snapshots else None
    while pair.order < n_target:
        extend_order(mp, pair, sd_floor, assert_tol)
        if snapshots:
            history.append(pair.copy())
    assert pair.x.max_order <= trunc and pair.y.max_order <= trunc
    if snapshots:
        return pair, history
    return pair


def invert_reduced_map(mp, deg):
    """Inverse of a reduced map as a general map container.

    Fixed-point elimination order by order: the angle displacement, the
    vertical variable, then the horizontal one (which is explicit thanks to
    the exact shear form).  The result rotates the angles by -omega and is a
    general (not reduced) map.
    """
    from .mapdata import TaylorFourierMap, XYPoly

    assert mp.kind == "map"
    dim, cut, d = mp.dim, mp.cut, mp.d
    om = np.asarray(mp.freqs, dtype=float)
    c_back = mp.shear().shift(-om) if dim else mp.shear()

    def shifted_poly(terms):
        poly = XYPoly(dim, cut, deg, dict(terms))
        return poly.shift(-om) if dim else poly

    ny = shifted_poly(mp.y_terms)
    nts = [shifted_poly(t) for t in mp.theta_terms]

    xid = XYPoly(dim, cut, deg, {(1, 0): 1.0})
    yid = XYPoly(dim, cut, deg, {(0, 1): 1.0})
    x_poly, y_poly = xid.copy(), yid.copy()
    t_polys = [XYPoly(dim, cut, deg) for _ in range(d)]
    for _ in range(deg + 1):
        tails = {a: t_polys[a] for a in range(d)}
        t_polys = [-nt.subst(x_poly, y_poly, tails) for nt in nts]
        tails = {a: t_polys[a] for a in range(d)}
        y_poly = yid - ny.subst(x_poly, y_poly, tails)
        c_poly = XYPoly(dim, cut, deg, {(0, 0): c_back}).subst(xid, yid, tails)
        x_poly = xid - c_poly.mul(y_poly)

    x_terms = dict((x_poly - xid).terms)
    y_terms = dict((y_poly - yid).terms)
    return TaylorFourierMap(
        "map", d, 0, cut, tuple(-w for w in mp.freqs),
        x_terms, y_terms, [dict(t.terms) for t in t_polys], k=mp.k, p=mp.p)
