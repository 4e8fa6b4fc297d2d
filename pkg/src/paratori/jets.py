"""Polynomial jets in a scalar variable u with Fourier-series coefficients,
plus plain scalar polynomials in u.

A ``TFJet`` is a finite sum  sum_n c_n(theta) u^n  with ``FourierSeries``
coefficients, truncated at a fixed top order ``trunc``.  These represent the
components of manifold parameterizations and their residuals.  ``UPoly`` is
the scalar-coefficient special case used for normal forms (the inner
dynamics), kept separate because composing and reverting it is much cheaper.
"""

import math

import numpy as np

from .errors import DimensionMismatch, StructureViolation
from .fourier import FourierSeries


class UPoly:
    """Scalar polynomial sum_n a_n u^n with truncation order."""

    __slots__ = ("terms", "trunc")

    def __init__(self, terms, trunc):
        self.trunc = int(trunc)
        self.terms = {}
        for n, a in terms.items():
            a = float(a)
            if a != 0.0 and n <= self.trunc:
                self.terms[int(n)] = a

    def coeff(self, n):
        return self.terms.get(n, 0.0)

    def orders(self):
        return sorted(self.terms)

    def __call__(self, u):
        if isinstance(u, (int, float, complex)):
            out = 0.0
            for n, a in self.terms.items():
                out = out + a * u ** n
            return out
        u = np.asarray(u)
        out = np.zeros(u.shape, dtype=np.result_type(u, float))
        for n, a in self.terms.items():
            out = out + a * u**n
        if out.ndim:
            return out
        return complex(out) if np.iscomplexobj(out) else float(out)

    def __add__(self, other):
        t = dict(self.terms)
        for n, a in other.terms.items():
            t[n] = t.get(n, 0.0) + a
        return UPoly(t, min(self.trunc, other.trunc))

    def __sub__(self, other):
        t = dict(self.terms)
        for n, a in other.terms.items():
            t[n] = t.get(n, 0.0) - a
        return UPoly(t, min(self.trunc, other.trunc))

    def scale(self, c):
        return UPoly({n: c * a for n, a in self.terms.items()}, self.trunc)

    def mul(self, other):
        trunc = min(self.trunc, other.trunc)
        t = {}
        for n, a in self.terms.items():
            for m, b in other.terms.items():
                if n + m <= trunc:
                    t[n + m] = t.get(n + m, 0.0) + a * b
        return UPoly(t, trunc)

    def power(self, j):
        out = UPoly({0: 1.0}, self.trunc)
        for _ in range(j):
            out = out.mul(self)
        return out

    def compose(self, inner):
        """self(inner(u)); inner must have zero constant term."""
        assert inner.coeff(0) == 0.0
        trunc = min(self.trunc, inner.trunc)
        out = UPoly({}, trunc)
        p = UPoly({0: 1.0}, trunc)
        for n in range(0, max(self.terms, default=0) + 1):
            a = self.coeff(n)
            if a:
                out = out + p.scale(a)
            p = p.mul(inner)
            if not p.terms:
                break
        return out

    def derivative(self):
        return UPoly({n - 1: n * a for n, a in self.terms.items() if n >= 1}, self.trunc)

    def reversion(self):
        """Compositional inverse of u + (higher order), by fixed point.

        Iterates  q <- id - (self - id) o q , which raises the agreement
        order by at least one per sweep.
        """
        if abs(self.coeff(1) - 1.0) > 0:
            raise StructureViolation("reversion needs unit linear coefficient")
        ident = UPoly({1: 1.0}, self.trunc)
        high = self - ident
        q = ident
        for _ in range(self.trunc + 1):
            q_new = ident - high.compose(q)
            if q_new.terms == q.terms:
                break
            q = q_new
        return q


class TFJet:
    """Truncated polynomial in u with FourierSeries coefficients."""

    __slots__ = ("dim", "cut", "trunc", "terms")

    def __init__(self, dim, cut, trunc, terms=None):
        self.dim = int(dim)
        self.cut = int(cut)
        self.trunc = int(trunc)
        self.terms = {}
        if terms:
            for n, s in terms.items():
                self.set_coefficient(n, s)

    @classmethod
    def zero(cls, dim, cut, trunc):
        return cls(dim, cut, trunc)

    def _coerce(self, s):
        if isinstance(s, FourierSeries):
            if s.dim != self.dim or (s.dim and s.cut != self.cut):
                raise DimensionMismatch("coefficient box does not match jet box")
            return s
        return FourierSeries.constant(float(s), self.dim, self.cut)

    def set_coefficient(self, n, s):
        n = int(n)
        assert n >= 0
        if n > self.trunc:
            return
        s = self._coerce(s)
        if s.is_zero():
            self.terms.pop(n, None)
        else:
            self.terms[n] = s

    def add_to_coefficient(self, n, s):
        if n > self.trunc:
            return
        cur = self.terms.get(n)
        self.set_coefficient(n, self._coerce(s) if cur is None else cur + self._coerce(s))

    def coefficient(self, n):
        s = self.terms.get(n)
        return s.copy() if s is not None else FourierSeries.zero(self.dim, self.cut)

    def orders(self):
        return sorted(self.terms)

    @property
    def min_order(self):
        return min(self.terms) if self.terms else self.trunc + 1

    @property
    def max_order(self):
        return max(self.terms) if self.terms else -1

    def is_zero(self):
        return not self.terms

    def copy(self):
        out = TFJet(self.dim, self.cut, self.trunc)
        out.terms = {n: s.copy() for n, s in self.terms.items()}
        return out

    def truncated(self, trunc):
        out = TFJet(self.dim, self.cut, trunc)
        out.terms = {n: s.copy() for n, s in self.terms.items() if n <= trunc}
        return out

    def tail(self, from_order):
        out = TFJet(self.dim, self.cut, self.trunc)
        out.terms = {n: s.copy() for n, s in self.terms.items() if n >= from_order}
        return out

    # ----- linear ---------------------------------------------------------

    def __add__(self, other):
        assert isinstance(other, TFJet)
        out = TFJet(self.dim, self.cut, min(self.trunc, other.trunc))
        for n, s in self.terms.items():
            if n <= out.trunc:
                out.terms[n] = s.copy()
        for n, s in other.terms.items():
            if n <= out.trunc:
                out.set_coefficient(n, out.coefficient(n) + s)
        return out

    def __neg__(self):
        out = TFJet(self.dim, self.cut, self.trunc)
        out.terms = {n: -s for n, s in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = float(c)
        out = TFJet(self.dim, self.cut, self.trunc)
        if c != 0.0:
            out.terms = {n: s * c for n, s in self.terms.items()}
        return out

    def mul_series(self, s):
        out = TFJet(self.dim, self.cut, self.trunc)
        for n, c in self.terms.items():
            out.set_coefficient(n, c * s)
        return out

    # ----- products -------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, TFJet):
            trunc = min(self.trunc, other.trunc)
            out = TFJet(self.dim, self.cut, trunc)
            for n, a in self.terms.items():
                for m, b in other.terms.items():
                    if n + m <= trunc:
                        out.add_to_coefficient(n + m, a * b)
            return out
        if isinstance(other, FourierSeries):
            return self.mul_series(other)
        return self.scale(other)

    __rmul__ = __mul__

    def mul_upoly(self, p):
        trunc = min(self.trunc, p.trunc)
        out = TFJet(self.dim, self.cut, trunc)
        for n, a in self.terms.items():
            for m, b in p.terms.items():
                if n + m <= trunc:
                    out.add_to_coefficient(n + m, a * b)
        return out

    def power(self, j):
        out = TFJet(self.dim, self.cut, self.trunc, {0: 1.0})
        for _ in range(j):
            out = out * self
        return out

    # ----- calculus and composition ----------------------------------------

    def derivative_u(self):
        out = TFJet(self.dim, self.cut, self.trunc)
        for n, s in self.terms.items():
            if n >= 1:
                out.set_coefficient(n - 1, s * n)
        return out

    def diff_theta(self, axis):
        out = TFJet(self.dim, self.cut, self.trunc)
        for n, s in self.terms.items():
            out.set_coefficient(n, s.diff(axis))
        return out

    def shift(self, delta):
        out = TFJet(self.dim, self.cut, self.trunc)
        for n, s in self.terms.items():
            out.set_coefficient(n, s.shift(delta))
        return out

    def compose_inner(self, r_poly, delta=None):
        """self(r(u), theta + delta) for a scalar inner polynomial r.

        r must have zero constant term; delta defaults to no angle shift.
        """
        assert r_poly.coeff(0) == 0.0
        src = self if delta is None else self.shift(delta)
        trunc = min(self.trunc, r_poly.trunc)
        out = TFJet(self.dim, self.cut, trunc)
        # cache powers of r up to the largest needed order
        powers = {0: UPoly({0: 1.0}, trunc)}
        top = max(src.terms, default=0)
        for j in range(1, top + 1):
            powers[j] = powers[j - 1].mul(r_poly)
        for n, s in src.terms.items():
            for m, a in powers[n].terms.items():
                out.add_to_coefficient(m, s * a)
        return out

    # ----- evaluation and size ----------------------------------------------

    def eval_grid(self, u_values, theta_points=None):
        """Values on the product of a u-array and a batch of angle points.

        Returns shape (len(u),) + batch_shape.
        """
        u = np.atleast_1d(np.asarray(u_values, dtype=float))
        if self.dim == 0:
            batch = ()
        else:
            theta_points = np.asarray(theta_points, dtype=float)
            batch = theta_points.shape[:-1]
        out = np.zeros((u.size,) + batch)
        for n, s in self.terms.items():
            v = s.eval(theta_points) if self.dim else s.average()
            out += np.multiply.outer(u**n, np.asarray(v))
        return out

    def coeff_sup(self, n, grid=None):
        s = self.terms.get(n)
        return 0.0 if s is None else s.sup_grid(grid)

    def max_coeff_sup(self, orders=None, grid=None):
        orders = self.orders() if orders is None else orders
        vals = [self.coeff_sup(n, grid) for n in orders]
        return max(vals) if vals else 0.0

    def __repr__(self):
        return "TFJet(orders=%s, trunc=%d)" % (self.orders(), self.trunc)


# ----- angle-argument Taylor expansion --------------------------------------


def angle_taylor(series, tails, trunc):
    """Expand series(theta + W(u, theta)) as a jet in u.

    ``tails`` lists one jet per angle axis (the axis displacement W_a); every
    nonzero tail must have positive minimum order so the expansion
    terminates at the truncation order.
    """
    dim = series.dim
    jet = TFJet(dim, series.cut if dim else 0, trunc, {0: series})
    for axis, w in enumerate(tails):
        if w is None or w.is_zero():
            continue
        assert w.min_order >= 1, "angle displacement must vanish at u = 0"
        depth = trunc // w.min_order
        acc = TFJet(dim, jet.cut, trunc)
        d_jet = jet
        w_pow = TFJet(dim, jet.cut, trunc, {0: 1.0})
        for j in range(depth + 1):
            if j > 0:
                w_pow = w_pow * w
                nxt = TFJet(dim, jet.cut, trunc)
                for n, s in d_jet.terms.items():
                    nxt.set_coefficient(n, s.diff(axis))
                d_jet = nxt
                if d_jet.is_zero() or w_pow.is_zero():
                    if w_pow.is_zero():
                        break
            term = (d_jet * w_pow).scale(1.0 / math.factorial(j))
            acc = acc + term
            if d_jet.is_zero():
                break
        jet = acc
    return jet


def eval_xy_terms(terms, jx, jy, tails, trunc):
    """Evaluate an {(l, m): series-or-float} term table at jets.

    Computes  sum_{l,m} s_{lm}(theta + W) * jx^l * jy^m  truncated in u.
    """
    dim, cut = jx.dim, jx.cut
    out = TFJet(dim, cut, trunc)
    if not terms:
        return out
    lmax = max(l for l, _ in terms)
    mmax = max(m for _, m in terms)
    xp = {0: TFJet(dim, cut, trunc, {0: 1.0})}
    for l in range(1, lmax + 1):
        xp[l] = xp[l - 1] * jx
    yp = {0: xp[0]}
    for m in range(1, mmax + 1):
        yp[m] = yp[m - 1] * jy
    for (l, m), s in sorted(terms.items()):
        if not isinstance(s, FourierSeries):
            s = FourierSeries.constant(float(s), dim, cut)
        coeff_jet = angle_taylor(s, tails, trunc)
        out = out + coeff_jet * xp[l] * yp[m]
    return out
