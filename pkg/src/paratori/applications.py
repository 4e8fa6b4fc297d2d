"""Preset builders for two concrete systems with a parabolic torus.

Two mechanical models reduce to the triangular field shapes the solvers
consume.  The first is an anharmonic well with a quasiperiodic parametric
kick: the origin is a degenerate rest point whose stable set is computed
from the quadratic forcing term.  The second is the scattering of a helium
atom off a periodically corrugated copper wall, where after compactifying
the wall distance the periodic orbit at infinity is parabolic and carries
stable/unstable manifolds of (x y)-shear type.
"""

import math

import numpy as np

from .errors import (ConfigError, EnergyBelowThreshold, HypothesisViolated)
from .fourier import FourierSeries
from .mapdata import (NormalizationRecord, TaylorFourierMap, XYPoly,
                      _inverse_change, _xy_identity)
from .flow_solver import solve_helicoure, validate_shear_field
from .pairs import residual_report


def _coerce_series(g, dim, cut, what):
    if isinstance(g, FourierSeries):
        if g.dim != dim:
            raise ConfigError(
                "%s has %d angle axes, expected %d" % (what, g.dim, dim))
        return g.copy()
    return FourierSeries.constant(float(g), dim, cut)


# ---------------------------------------------------------------------------
# quasiperiodically kicked anharmonic well
# ---------------------------------------------------------------------------

class OscillatorParams:
    """Anharmonic well with a quadratic quasiperiodic kick.

    The model is

        x'' = -2 n_pot c_pot x^(2 n_pot - 1) + alpha x^2 g(nu t),

    a well  V = c_pot x^(2 n_pot)  plus a parametric forcing of shape g and
    amplitude alpha.  g may be a FourierSeries over as many angles as there
    are forcing frequencies, or a plain number (autonomous forcing);
    ``cut`` sets the mode box only when g is given as a number.
    """

    def __init__(self, c_pot, n_pot, alpha, g, nu=(), cut=16):
        self.c_pot = float(c_pot)
        self.n_pot = int(n_pot)
        self.alpha = float(alpha)
        self.nu = tuple(float(v) for v in nu)
        if self.c_pot <= 0:
            raise ConfigError("well coefficient must be positive")
        if self.n_pot < 2:
            raise ConfigError(
                "need a degenerate well (n_pot >= 2); n_pot = 1 gives a "
                "linear restoring force and no parabolic point")
        self.g = _coerce_series(g, len(self.nu), cut, "forcing shape")
        self.cut = self.g.cut if self.g.dim else int(cut)


def build_oscillator_field(p):
    """First-order field of the kicked well, ready for the power-class solve.

    Writes x' = y, y' = alpha g(tau) x^2 - 2 n_pot c_pot x^(2 n_pot - 1)
    with the well force carried as an admissible higher-order remainder.
    All angles are external drive; there is no dynamic angle equation.
    """
    gbar = p.g.average()
    if p.alpha * gbar <= 0:
        raise HypothesisViolated(
            "mean quadratic forcing alpha * mean(g) = %.3e must be positive"
            % (p.alpha * gbar))
    y_terms = {
        (2, 0): p.g * p.alpha,
        (2 * p.n_pot - 1, 0): -2.0 * p.n_pot * p.c_pot,
    }
    fd = TaylorFourierMap("field", 0, len(p.nu), p.cut, p.nu,
                          {(0, 1): 1.0}, y_terms, [], k=2, p=None)
    fd.validate_reduced()
    return fd


def build_oscillator_unstable(p):
    """Field whose stable solve parameterizes the well's unstable manifold.

    Reverses time and flips the velocity sign; the combination keeps the
    field shape while running every forcing hull backwards.  A point
    (x, y, tau) on the stable manifold of the returned field corresponds to
    (x, -y, tau) on the unstable manifold of ``build_oscillator_field(p)``.
    Applying the construction twice returns the original field.
    """
    return build_oscillator_field(p).transformed_field(
        sx=1, sy=-1, time_sign=-1)


# ---------------------------------------------------------------------------
# helium scattering off a corrugated copper wall
# ---------------------------------------------------------------------------

class HeCuParams:
    """Constants of the helium/copper wall-scattering model.

    D            well depth of the wall attraction,
    alpha_morse  inverse-length stiffness of the attraction,
    m            atom mass,
    h            conserved energy; scattering states need h > D,
    g_surface    periodic corrugation profile along the wall (FourierSeries
                 over one angle, or a plain number; zero switches the
                 lateral coupling off).

    Any consistent unit system works; all outputs are in the same units.
    """

    def __init__(self, D, alpha_morse, m, h, g_surface=0.0, cut=16):
        self.D = float(D)
        self.alpha_morse = float(alpha_morse)
        self.m = float(m)
        self.h = float(h)
        if self.D <= 0 or self.alpha_morse <= 0 or self.m <= 0:
            raise ConfigError("D, alpha_morse and m must all be positive")
        self.g_surface = _coerce_series(g_surface, 1, cut, "corrugation")
        self.cut = self.g_surface.cut


def build_hecu_field(p, expansion="displayed", deg=6):
    """Shear-form field of the compactified scattering system.

    After restricting to the energy level h, compactifying the wall
    distance z through y = -exp(-alpha z) and straightening the vertical
    momentum equation by the quadratic change
    y_new = y + (1 + g(theta)) y^2, the motion near the parabolic orbit at
    infinity takes the (x y)-shear triangular form.  Returns the field and
    the NormalizationRecord holding that change for pulling solved jets
    back to wall coordinates.

    expansion="displayed" keeps only the leading coefficients

        c = 2 D alpha,   b = -alpha / m,   d = -D / sqrt(2 m (h - D)),

    while expansion="expanded" carries the full Taylor expansion of the
    angular square-root equation (and of the change of variables) to total
    degree ``deg``.  The expansion is asymptotic near the orbit; the record
    reports the radius where the square-root argument can vanish, and
    nothing enforces it.
    """
    if p.h <= p.D:
        raise EnergyBelowThreshold(
            "energy h = %g does not exceed the well depth D = %g; no "
            "scattering orbits reach infinity" % (p.h, p.D))
    if expansion not in ("displayed", "expanded"):
        raise ConfigError("expansion must be 'displayed' or 'expanded'")
    D, alpha, m = p.D, p.alpha_morse, p.m
    A = 2.0 * m * (p.h - D)
    omega = math.sqrt(A) / m
    c = 2.0 * D * alpha
    b = -alpha / m
    d1 = D / math.sqrt(A)
    cut = p.cut
    g = p.g_surface
    gamma = g + 1.0

    h_fwd = XYPoly(1, cut, deg, {(0, 2): gamma})
    y_inv = _inverse_change(h_fwd, deg)

    if expansion == "displayed":
        fd = TaylorFourierMap("field", 1, 0, cut, (omega,),
                              {(0, 1): c}, {(1, 1): b}, [{(0, 1): -d1}])
    else:
        # vertical momentum: exactly c * y_new by construction of the change
        pdot = XYPoly(1, cut, deg, {(0, 1): c, (0, 2): gamma * c})
        ydot = XYPoly(1, cut, deg, {(1, 1): b})
        # angular speed sqrt(A - s) / m with s collecting the wall potential
        # and the vertical kinetic term
        s_over = XYPoly(1, cut, deg, {
            (0, 1): 4.0 * m * D / A,
            (0, 2): gamma * (2.0 * m * D / A),
            (2, 0): 1.0 / A,
        })
        root = XYPoly(1, cut, deg, {(0, 0): 1.0})
        spow = XYPoly(1, cut, deg, {(0, 0): 1.0})
        cj = 1.0
        for j in range(1, deg + 1):
            cj *= (2 * j - 3) / (2.0 * j)
            spow = spow.mul(s_over)
            root = root + spow.scale(cj)
        theta_full = root.scale(omega)
        theta_dev = theta_full + XYPoly(1, cut, deg, {(0, 0): -omega})

        # the changed vertical coordinate moves with both the old vertical
        # equation and, through the corrugation, the angular one
        stretch = XYPoly(1, cut, deg, {(0, 0): 1.0, (0, 1): gamma * 2.0})
        swirl = XYPoly(1, cut, deg, {(0, 2): g.diff(0)})
        ydot_new = stretch.mul(ydot) + swirl.mul(theta_full)

        xid = _xy_identity(1, cut, deg, "x")
        pdot_n = pdot.subst(xid, y_inv)
        ydot_n = ydot_new.subst(xid, y_inv)
        theta_n = theta_dev.subst(xid, y_inv)
        scale = max(s.coeff_norm() for s in
                    list(pdot_n.terms.values()) + list(ydot_n.terms.values())
                    + list(theta_n.terms.values()))
        tol = 1e-13 * scale

        def clean(poly):
            return {lm: s for lm, s in poly.terms.items()
                    if s.coeff_norm() > tol}

        fd = TaylorFourierMap("field", 1, 0, cut, (omega,),
                              clean(pdot_n), clean(ydot_n), [clean(theta_n)])
    validate_shear_field(fd)
    record = NormalizationRecord(gamma, h_fwd, y_inv)
    record.validity = {
        "y": A / (4.0 * m * D),
        "p": math.sqrt(A),
        "note": "square-root argument can vanish there; reported only",
    }
    return fd, record


def _pulled_back(pair, record):
    """Same manifold in wall coordinates: vertical jet through the inverse
    change, everything else untouched."""
    out = pair.copy()
    out.y = record.pullback(pair.x, pair.y, pair.tails, pair.trunc)
    out.diagnostics["wall_coordinates"] = True
    return out


def hecu_manifolds(p, n_target, expansion="displayed",
                   theta_leading="closed_form", return_reports=False):
    """Stable and unstable wall-scattering manifolds plus a check report.

    Solves both branches of the shear-form field to order ``n_target``,
    verifies the closed-form leading coefficients

        K2y = -1/(4 m D),  K1theta = -1/(alpha sqrt(2 m (h - D))),
        |Y2| = alpha/(2 m),  omega = sqrt(2 (h - D)/m),

    against the solved jets (the first three in the default
    displayed/closed_form convention), checks the branch sign pattern (the
    two branches share the vertical and angular leading-coefficient
    magnitudes and have opposite-sign normal-form leading terms), fits the
    invariance residual slopes, and finally pulls both parameterizations
    back to wall coordinates.  Returns (stable pair, unstable pair, report
    dict); with ``return_reports`` the per-branch residual measurement
    objects (taken in the solve coordinates, before pullback) come back as
    a fourth value.
    """
    fd, record = build_hecu_field(p, expansion=expansion,
                                  deg=max(6, n_target + 2))
    stable = solve_helicoure(fd, n_target, branch="stable",
                             theta_leading=theta_leading)
    unstable = solve_helicoure(fd, n_target, branch="unstable",
                               theta_leading=theta_leading)

    D, alpha, m = p.D, p.alpha_morse, p.m
    A = 2.0 * m * (p.h - D)
    closed = {
        "K2y": -1.0 / (4.0 * m * D),
        "K1theta": -1.0 / (alpha * math.sqrt(A)),
        "Y2": alpha / (2.0 * m),
        "omega": math.sqrt(A) / m,
    }
    got = {
        "K2y": stable.y_coeff_avg(2),
        "K1theta": stable.tail_coeff_avg(0, 1),
        "Y2": abs(stable.inner_coeff(2)),
        "omega": stable.freqs[0],
    }
    deviations = {key: abs(got[key] - closed[key]) / abs(closed[key])
                  for key in closed}

    sign_pattern = {
        "stable_contracts": stable.inner_coeff(2) < 0,
        "unstable_expands": unstable.inner_coeff(2) > 0,
        "shared_vertical": abs(abs(unstable.y_coeff_avg(2))
                               - abs(stable.y_coeff_avg(2))),
        "shared_angular": abs(abs(unstable.tail_coeff_avg(0, 1))
                              - abs(stable.tail_coeff_avg(0, 1))),
        "opposite_normal_form": abs(unstable.inner_coeff(2)
                                    + stable.inner_coeff(2)),
    }

    slopes = {}
    reports = {}
    for name, pair in (("stable", stable), ("unstable", unstable)):
        rep = residual_report(fd, pair)
        reports[name] = rep
        slopes[name] = {comp["name"]: comp["slope"] for comp in rep.components}

    report = {
        "closed_forms": closed,
        "computed": got,
        "relative_deviations": deviations,
        "sign_pattern": sign_pattern,
        "residual_slopes": slopes,
        "expansion": expansion,
        "theta_leading": theta_leading,
    }
    if expansion == "displayed" and theta_leading == "closed_form":
        worst = max(deviations.values())
        assert worst <= 1e-10, deviations
    assert sign_pattern["stable_contracts"] and sign_pattern["unstable_expands"]
    assert sign_pattern["opposite_normal_form"] <= 1e-12
    assert sign_pattern["shared_vertical"] <= 1e-12
    assert sign_pattern["shared_angular"] <= 1e-12
    for name in slopes:
        for comp, slope in slopes[name].items():
            # None marks an identically-zero tail (exact solve)
            assert slope is None or slope > n_target + 2 - 0.25, \
                (name, comp, slope)

    out = (_pulled_back(stable, record), _pulled_back(unstable, record),
           report)
    if return_reports:
        return out + (reports,)
    return out
