"""Containers for the input dynamics and coordinate normalizations.

A ``TaylorFourierMap`` holds a map or a vector field that is polynomial in
the planar variables (x, y) with truncated Fourier coefficients in the
angles.  Angle axes split into ``d`` dynamic axes (rotating with the torus,
where the parameterization gets angular corrections) and ``drive`` external
phase axes (quasiperiodic forcing; rigid by fiat).  Maps advance the dynamic
angles by a fixed rotation; fields rotate all angle axes with constant
frequencies.

``XYPoly`` is the working bivariate algebra used to normalize general input
so that the first component becomes exactly  x + c(theta) * y  (maps) or
c(theta) * y  (fields); ``NormalizationRecord`` remembers the change of
variables so computed manifolds can be pulled back.
"""

import numpy as np

from .errors import DimensionMismatch, StructureViolation
from .fourier import FourierSeries, reciprocal
from .jets import TFJet, eval_xy_terms


class XYPoly:
    """Polynomial in (x, y) with FourierSeries coefficients, truncated by
    total degree."""

    __slots__ = ("dim", "cut", "deg", "terms")

    def __init__(self, dim, cut, deg, terms=None):
        self.dim = int(dim)
        self.cut = int(cut)
        self.deg = int(deg)
        self.terms = {}
        if terms:
            for lm, s in terms.items():
                self.set_coefficient(lm, s)

    def _coerce(self, s):
        if isinstance(s, FourierSeries):
            if s.dim != self.dim or (s.dim and s.cut != self.cut):
                raise DimensionMismatch("coefficient box does not match polynomial box")
            return s
        return FourierSeries.constant(float(s), self.dim, self.cut)

    def set_coefficient(self, lm, s):
        l, m = int(lm[0]), int(lm[1])
        assert l >= 0 and m >= 0
        if l + m > self.deg:
            return
        s = self._coerce(s)
        if s.is_zero():
            self.terms.pop((l, m), None)
        else:
            self.terms[(l, m)] = s

    def add_to_coefficient(self, lm, s):
        cur = self.terms.get(tuple(lm))
        self.set_coefficient(lm, self._coerce(s) if cur is None else cur + self._coerce(s))

    def coefficient(self, lm):
        s = self.terms.get(tuple(lm))
        return s.copy() if s is not None else FourierSeries.zero(self.dim, self.cut)

    def copy(self):
        out = XYPoly(self.dim, self.cut, self.deg)
        out.terms = {lm: s.copy() for lm, s in self.terms.items()}
        return out

    def min_total_degree(self):
        return min((l + m for l, m in self.terms), default=self.deg + 1)

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        out = XYPoly(self.dim, self.cut, min(self.deg, other.deg))
        for lm, s in self.terms.items():
            if sum(lm) <= out.deg:
                out.terms[lm] = s.copy()
        for lm, s in other.terms.items():
            out.add_to_coefficient(lm, s)
        return out

    def __neg__(self):
        out = XYPoly(self.dim, self.cut, self.deg)
        out.terms = {lm: -s for lm, s in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a):
        a = float(a)
        out = XYPoly(self.dim, self.cut, self.deg)
        if a != 0.0:
            out.terms = {lm: s * a for lm, s in self.terms.items()}
        return out

    def mul_series(self, c):
        out = XYPoly(self.dim, self.cut, self.deg)
        for lm, s in self.terms.items():
            out.set_coefficient(lm, s * c)
        return out

    def mul(self, other):
        deg = min(self.deg, other.deg)
        out = XYPoly(self.dim, self.cut, deg)
        for (l1, m1), a in self.terms.items():
            for (l2, m2), b in other.terms.items():
                if l1 + l2 + m1 + m2 <= deg:
                    out.add_to_coefficient((l1 + l2, m1 + m2), a * b)
        return out

    def power(self, j):
        out = XYPoly(self.dim, self.cut, self.deg, {(0, 0): 1.0})
        for _ in range(j):
            out = out.mul(self)
        return out

    def diff_x(self):
        out = XYPoly(self.dim, self.cut, self.deg)
        for (l, m), s in self.terms.items():
            if l >= 1:
                out.set_coefficient((l - 1, m), s * l)
        return out

    def diff_y(self):
        out = XYPoly(self.dim, self.cut, self.deg)
        for (l, m), s in self.terms.items():
            if m >= 1:
                out.set_coefficient((l, m - 1), s * m)
        return out

    def diff_theta(self, axis):
        out = XYPoly(self.dim, self.cut, self.deg)
        for lm, s in self.terms.items():
            out.set_coefficient(lm, s.diff(axis))
        return out

    def shift(self, delta):
        out = XYPoly(self.dim, self.cut, self.deg)
        for lm, s in self.terms.items():
            out.set_coefficient(lm, s.shift(delta))
        return out

    def subst(self, px, py, tails=None):
        """Substitute x -> px, y -> py, theta_a -> theta_a + W_a.

        px, py are XYPoly with zero constant term; tails (optional) maps
        angle-axis index -> XYPoly displacement of positive minimal total
        degree.
        """
        assert (0, 0) not in px.terms and (0, 0) not in py.terms
        import math as _math

        deg = self.deg
        out = XYPoly(self.dim, self.cut, deg)
        lmax = max((l for l, _ in self.terms), default=0)
        mmax = max((m for _, m in self.terms), default=0)
        xp = {0: XYPoly(self.dim, self.cut, deg, {(0, 0): 1.0})}
        for l in range(1, lmax + 1):
            xp[l] = xp[l - 1].mul(px)
        yp = {0: xp[0]}
        for m in range(1, mmax + 1):
            yp[m] = yp[m - 1].mul(py)
        for (l, m), s in sorted(self.terms.items()):
            coeff = XYPoly(self.dim, self.cut, deg, {(0, 0): s})
            if tails:
                for axis, w in tails.items():
                    if w is None or w.is_zero():
                        continue
                    mo = w.min_total_degree()
                    assert mo >= 1
                    depth = deg // mo
                    acc = XYPoly(self.dim, self.cut, deg)
                    d_poly = coeff
                    w_pow = xp[0]
                    for j in range(depth + 1):
                        if j > 0:
                            w_pow = w_pow.mul(w)
                            d_poly = d_poly.diff_theta(axis)
                            if w_pow.is_zero():
                                break
                        acc = acc + d_poly.mul(w_pow).scale(1.0 / _math.factorial(j))
                        if d_poly.is_zero():
                            break
                    coeff = acc
            out = out + coeff.mul(xp[l]).mul(yp[m])
        return out

    def eval(self, x, y, ang=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (l, m), s in self.terms.items():
            sv = s.eval(ang) if self.dim else s.average()
            out = out + np.asarray(sv) * x**l * y**m
        return out if out.ndim else float(out)

    def to_jet(self, jx, jy, tails, trunc):
        """Evaluate at u-jets (x -> jx, y -> jy, theta_a -> theta_a + W_a)."""
        return eval_xy_terms(self.terms, jx, jy, tails, trunc)


def _validate_terms(terms, dim, cut):
    out = {}
    for lm, s in terms.items():
        l, m = int(lm[0]), int(lm[1])
        if not isinstance(s, FourierSeries):
            s = FourierSeries.constant(float(s), dim, cut)
        if s.dim != dim or (dim and s.cut != cut):
            raise DimensionMismatch("term (%d, %d) has a mismatched box" % (l, m))
        if not s.is_zero():
            out[(l, m)] = s
    return out


class TaylorFourierMap:
    """A map or vector field, polynomial in (x, y), Fourier in the angles.

    For kind="map" the full images are
        x' = x + (x_terms),  y' = y + (y_terms),
        theta' = theta + omega + (theta_terms),
    i.e. term tables hold only the deviation from the identity.  For
    kind="field" the tables are the velocities themselves and the angle
    velocities are  freqs + (theta_terms on the first d axes).
    """

    def __init__(self, kind, d, drive, cut, freqs, x_terms, y_terms, theta_terms,
                 k=None, p=None):
        assert kind in ("map", "field")
        self.kind = kind
        self.d = int(d)
        self.drive = int(drive)
        self.dim = self.d + self.drive
        self.cut = int(cut)
        self.freqs = tuple(float(w) for w in freqs)
        if kind == "map":
            assert self.drive == 0, "driven phases are a flow concept here"
            assert len(self.freqs) == self.d
        else:
            assert len(self.freqs) == self.dim
        self.x_terms = _validate_terms(x_terms, self.dim, self.cut)
        self.y_terms = _validate_terms(y_terms, self.dim, self.cut)
        assert len(theta_terms) == self.d
        self.theta_terms = [_validate_terms(t, self.dim, self.cut) for t in theta_terms]
        self.k = None if k is None else int(k)
        self.p = None if p is None else int(p)

    # ----- structure checks ---------------------------------------------

    def shear(self):
        return self.coefficient_x((0, 1))

    def coefficient_x(self, lm):
        s = self.x_terms.get(tuple(lm))
        return s.copy() if s is not None else FourierSeries.zero(self.dim, self.cut)

    def coefficient_y(self, lm):
        s = self.y_terms.get(tuple(lm))
        return s.copy() if s is not None else FourierSeries.zero(self.dim, self.cut)

    def coefficient_theta(self, axis, lm):
        s = self.theta_terms[axis].get(tuple(lm))
        return s.copy() if s is not None else FourierSeries.zero(self.dim, self.cut)

    def validate_reduced(self):
        """Check the triangular structure the order-by-order solver needs.

        x-part exactly c(theta) y; y-part led by x^k with admissible tail
        (terms with a y factor of total degree >= k, pure-x terms beyond
        order k); angle parts led by x^p with the analogous tail shape.
        With d == 0 no angle-part condition applies and p is ignored.
        """
        k = self.k
        if k is None or k < 2:
            raise StructureViolation("need the leading y-order k >= 2")
        for lm in self.x_terms:
            if lm != (0, 1):
                raise StructureViolation(
                    "x-part must be exactly shear * y, found term %s" % (lm,)
                )
        if (0, 1) not in self.x_terms:
            raise StructureViolation("x-part misses the shear term")
        for (l, m) in self.y_terms:
            if m == 0:
                if l < k:
                    raise StructureViolation(
                        "pure-x term x^%d in the y-part below leading order %d" % (l, k)
                    )
            elif l + m < k:
                raise StructureViolation(
                    "y-part term (%d, %d) of total degree below %d" % (l, m, k)
                )
        if (k, 0) not in self.y_terms:
            raise StructureViolation("y-part misses the leading x^%d term" % k)
        if self.d == 0:
            return
        p = self.p
        if p is None or p < 1:
            raise StructureViolation("need the leading angle-drift order p >= 1")
        if not (2 * p > k - 1):
            raise StructureViolation("orders violate 2p > k - 1")
        for a in range(self.d):
            for (l, m) in self.theta_terms[a]:
                if m == 0:
                    if l < p:
                        raise StructureViolation(
                            "pure-x term x^%d in angle axis %d below order %d"
                            % (l, a, p)
                        )
                elif l + m < p:
                    raise StructureViolation(
                        "angle term (%d, %d) on axis %d of total degree below %d"
                        % (l, m, a, p)
                    )

    def validate_xy_shear(self):
        """Check x-part is led by shear * y with an invertible shear (the
        prerequisite for normalization)."""
        if (0, 1) not in self.x_terms:
            raise StructureViolation("x-part misses a shear * y term")
        for (l, m) in self.x_terms:
            if (l, m) != (0, 1) and l + m < 2:
                raise StructureViolation("x-part has an extra linear term %s" % ((l, m),))

    # ----- pointwise evaluation ------------------------------------------

    def _sum_terms(self, terms, x, y, ang):
        out = np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        for (l, m), s in terms.items():
            sv = s.eval(ang) if self.dim else s.average()
            out = out + np.asarray(sv) * np.asarray(x) ** l * np.asarray(y) ** m
        return out

    def eval(self, x, y, ang=None):
        """Image (map) or velocity (field) at points.

        Returns (X, Y, A) with A of shape batch + (dim,) holding the full
        angle image/velocity (dynamic axes first, then drive axes).
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dx = self._sum_terms(self.x_terms, x, y, ang)
        dy = self._sum_terms(self.y_terms, x, y, ang)
        batch = np.broadcast(x, y).shape
        ang_out = np.zeros(batch + (self.dim,))
        for a in range(self.d):
            ang_out[..., a] = self._sum_terms(self.theta_terms[a], x, y, ang)
        if self.kind == "map":
            X = x + dx
            Y = y + dy
            for a in range(self.d):
                ang_out[..., a] += (np.asarray(ang)[..., a] if self.dim else 0.0) + self.freqs[a]
            return X, Y, ang_out
        for j in range(self.dim):
            ang_out[..., j] += self.freqs[j]
        return dx, dy, ang_out

    # ----- symmetry transform (fields) ------------------------------------

    def transformed_field(self, sx=1, sy=1, time_sign=1):
        """Conjugate the field by (x, y) -> (sx x, sy y) and rescale time.

        Angle frequencies pick up the time sign (a time reversal also runs
        every forcing hull backwards).
        """
        assert self.kind == "field"
        assert sx in (1, -1) and sy in (1, -1) and time_sign in (1, -1)

        def tx(terms, out_sign):
            return {
                (l, m): s * (time_sign * out_sign * sx**l * sy**m)
                for (l, m), s in terms.items()
            }

        return TaylorFourierMap(
            "field",
            self.d,
            self.drive,
            self.cut,
            tuple(time_sign * w for w in self.freqs),
            tx(self.x_terms, sx),
            tx(self.y_terms, sy),
            [tx(t, 1) for t in self.theta_terms],
            k=self.k,
            p=self.p,
        )

    def __repr__(self):
        return "TaylorFourierMap(kind=%s, d=%d, drive=%d, cut=%d, k=%s, p=%s)" % (
            self.kind, self.d, self.drive, self.cut, self.k, self.p)


class NormalizationRecord:
    """Change of variables  y_new = y + h(x, y, theta)  and its inverse
    y = y_new + H(x, y_new, theta), kept so manifolds of the normalized
    system can be pulled back to the original coordinates."""

    def __init__(self, shear, forward, inverse):
        self.shear = shear
        self.forward = forward
        self.inverse = inverse

    def pullback(self, jx, jy_new, tails, trunc):
        """Original-variable y-jet from normalized-variable jets."""
        return self.inverse.to_jet(jx, jy_new, tails, trunc)


def _terms_to_xypoly(terms, dim, cut, deg):
    return XYPoly(dim, cut, deg, dict(terms))


def _xy_identity(dim, cut, deg, which):
    lm = (1, 0) if which == "x" else (0, 1)
    return XYPoly(dim, cut, deg, {lm: 1.0})


def _inverse_change(h, deg):
    """Solve  y = ynew - h(x, y, theta)  for y as a polynomial in (x, ynew)."""
    dim, cut = h.dim, h.cut
    ynew = _xy_identity(dim, cut, deg, "y")
    xid = _xy_identity(dim, cut, deg, "x")
    Y = ynew.copy()
    for _ in range(deg + 1):
        Y_next = ynew - h.subst(xid, Y)
        if all(
            (Y_next.coefficient(lm) - Y.coefficient(lm)).is_zero(1e-15)
            for lm in set(Y_next.terms) | set(Y.terms)
        ):
            Y = Y_next
            break
        Y = Y_next
    return Y


def _drop_dust(terms, tol):
    """Remove terms whose coefficients are Fourier-truncation dust."""
    return {lm: s for lm, s in terms.items() if s.coeff_norm() > tol}


def reduce_general_map(mp, deg, tol=1e-10):
    """Normalize a map so its x-part becomes exactly  x + c(theta) * y.

    The input needs an invertible shear coefficient on the  y  term of the
    x-part; everything else in the x-part is absorbed into a new vertical
    variable.  Returns (reduced map, NormalizationRecord).  Coefficients
    below ``tol`` (times the data size) are discarded: the normalization is
    exact only up to the Fourier cut, so forbidden slots collect dust at the
    truncation level.
    """
    assert mp.kind == "map"
    mp.validate_xy_shear()
    dim, cut = mp.dim, mp.cut
    c = mp.shear()
    rc = reciprocal(c)
    f = _terms_to_xypoly(mp.x_terms, dim, cut, deg)
    g = f.mul_series(rc)  # = y + h
    h = g - _xy_identity(dim, cut, deg, "y")
    Y = _inverse_change(h, deg)
    xid = _xy_identity(dim, cut, deg, "x")

    # full images in the original variables
    Fx = xid + f
    Fy = _xy_identity(dim, cut, deg, "y") + _terms_to_xypoly(mp.y_terms, dim, cut, deg)
    Bs = [_terms_to_xypoly(t, dim, cut, deg) for t in mp.theta_terms]

    # re-express the images in (x, y_new)
    Fx_n = Fx.subst(xid, Y)
    Fy_n = Fy.subst(xid, Y)
    Bs_n = [B.subst(xid, Y) for B in Bs]

    # the new vertical coordinate after one step: g evaluated on the image,
    # with the angle argument theta + omega + B
    omega_full = list(mp.freqs) + [0.0] * mp.drive
    g_shift = g.shift(omega_full) if dim else g
    tails = {a: Bs_n[a] for a in range(mp.d)}
    ynew_image = g_shift.subst(Fx_n, Fy_n, tails)

    scale = max(1.0, c.coeff_norm())
    y_terms = {lm: s for lm, s in ynew_image.terms.items() if lm != (0, 1)}
    y_id_defect = ynew_image.coefficient((0, 1)) - 1.0
    y_terms[(0, 1)] = y_id_defect

    reduced = TaylorFourierMap(
        "map",
        mp.d,
        0,
        cut,
        mp.freqs,
        {(0, 1): c},
        _drop_dust(y_terms, tol * scale),
        [_drop_dust(dict(B.terms), tol * scale) for B in Bs_n],
        k=mp.k,
        p=mp.p,
    )
    record = NormalizationRecord(c, h, Y)
    return reduced, record


def reduce_general_field(fd, deg, tol=1e-10):
    """Normalize a field so its x-part becomes exactly  c(theta) * y."""
    assert fd.kind == "field"
    fd.validate_xy_shear()
    dim, cut = fd.dim, fd.cut
    c = fd.shear()
    rc = reciprocal(c)
    f = _terms_to_xypoly(fd.x_terms, dim, cut, deg)
    g = f.mul_series(rc)
    h = g - _xy_identity(dim, cut, deg, "y")
    Y = _inverse_change(h, deg)
    xid = _xy_identity(dim, cut, deg, "x")

    Xx = f
    Xy = _terms_to_xypoly(fd.y_terms, dim, cut, deg)
    Bs = [_terms_to_xypoly(t, dim, cut, deg) for t in fd.theta_terms]

    gdot = g.diff_x().mul(Xx) + g.diff_y().mul(Xy)
    for j in range(dim):
        gj = g.diff_theta(j)
        if gj.is_zero():
            continue
        gdot = gdot + gj.scale(fd.freqs[j])
        if j < fd.d and not Bs[j].is_zero():
            gdot = gdot + gj.mul(Bs[j])

    ynew_dot = gdot.subst(xid, Y)
    Bs_n = [B.subst(xid, Y) for B in Bs]

    scale = max(1.0, c.coeff_norm())
    reduced = TaylorFourierMap(
        "field",
        fd.d,
        fd.drive,
        cut,
        fd.freqs,
        {(0, 1): c},
        _drop_dust(dict(ynew_dot.terms), tol * scale),
        [_drop_dust(dict(B.terms), tol * scale) for B in Bs_n],
        k=fd.k,
        p=fd.p,
    )
    record = NormalizationRecord(c, h, Y)
    return reduced, record
