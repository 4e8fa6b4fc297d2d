"""Truncated multivariate Fourier series on a torus.

Coefficients live on the centered integer box ``|k|_inf <= cut`` and are
stored densely as a complex array of shape ``(2*cut+1,)**dim`` with mode k at
index ``k + cut`` along each axis.  All series represent real-valued
functions, so coefficients satisfy ``c[-k] == conj(c[k])``; arithmetic
re-imposes this symmetry to stop round-off drift.

``dim == 0`` is allowed and means "a constant": the coefficient array is a
zero-dimensional complex scalar.  This keeps autonomous problems (no angular
variables at all) on the same code path as quasiperiodic ones.
"""

import numpy as np
from scipy import signal

from .errors import (
    CNotInvertible,
    DimensionMismatch,
    NonZeroAverage,
    SmallDivisorUnderflow,
)

TWO_PI_I = 2j * np.pi


def _mode_range(cut):
    return np.arange(-cut, cut + 1)


def _mode_dot(cut, dim, vec):
    """Array over the mode box holding k . vec."""
    out = np.zeros((2 * cut + 1,) * dim)
    for a in range(dim):
        shape = [1] * dim
        shape[a] = 2 * cut + 1
        out = out + (_mode_range(cut) * vec[a]).reshape(shape)
    return out


class FourierSeries:
    """Dense real-symmetric Fourier polynomial on T^dim."""

    __slots__ = ("dim", "cut", "coeffs")

    def __init__(self, coeffs, symmetrize=True):
        coeffs = np.asarray(coeffs, dtype=complex)
        self.dim = coeffs.ndim
        if self.dim == 0:
            self.cut = 0
        else:
            n = coeffs.shape[0]
            assert n % 2 == 1, "coefficient box must have odd side"
            assert all(s == n for s in coeffs.shape), "coefficient box must be cubic"
            self.cut = (n - 1) // 2
        if symmetrize and self.dim > 0:
            coeffs = 0.5 * (coeffs + np.conj(np.flip(coeffs)))
        elif symmetrize:
            coeffs = np.asarray(complex(coeffs.real.item(), 0.0))
        self.coeffs = coeffs

    # ----- constructors -------------------------------------------------

    @classmethod
    def zero(cls, dim, cut):
        if dim == 0:
            return cls(np.zeros((), dtype=complex), symmetrize=False)
        return cls(np.zeros((2 * cut + 1,) * dim, dtype=complex), symmetrize=False)

    @classmethod
    def constant(cls, value, dim, cut):
        s = cls.zero(dim, cut)
        s.coeffs[(s.cut,) * dim if dim else ()] = float(value)
        return s

    @classmethod
    def from_modes(cls, modes, dim, cut, add_conjugate=True):
        """Build from a {mode tuple: complex coeff} dict.

        With ``add_conjugate`` the mirror coefficient of every listed
        positive mode is filled in automatically so the result is real.
        """
        s = cls.zero(dim, cut)
        for k, c in modes.items():
            k = tuple(int(x) for x in (k if isinstance(k, tuple) else (k,)))
            if len(k) != dim:
                raise DimensionMismatch("mode %s has wrong length" % (k,))
            assert all(abs(x) <= cut for x in k), "mode outside the box"
            idx = tuple(x + cut for x in k)
            s.coeffs[idx] += complex(c)
            if add_conjugate and any(x != 0 for x in k):
                midx = tuple(-x + cut for x in k)
                s.coeffs[midx] += np.conj(complex(c))
        if add_conjugate:
            # the zero mode must already be real; symmetrize cheaply anyway
            return cls(s.coeffs)
        return cls(s.coeffs, symmetrize=False)

    @classmethod
    def from_grid(cls, values, cut):
        """Exact modes of trigonometric data sampled on a uniform grid.

        ``values`` is real of shape (N,)*dim with N >= 2*cut+1; modes beyond
        the sampling Nyquist alias in the usual way, so oversample when the
        data is not already band-limited.
        """
        values = np.asarray(values, dtype=float)
        dim = values.ndim
        if dim == 0:
            return cls(np.asarray(complex(values.item())), symmetrize=False)
        n = values.shape[0]
        assert n >= 2 * cut + 1
        hat = np.fft.fftn(values) / values.size
        picks = [(_mode_range(cut)) % n for _ in range(dim)]
        return cls(hat[np.ix_(*picks)])

    @classmethod
    def from_function(cls, f, dim, cut, oversample=8):
        """Sample a callable on an oversampled grid and truncate."""
        if dim == 0:
            return cls(np.asarray(complex(f(np.zeros(0)))), symmetrize=False)
        n = oversample * (2 * cut + 1)
        axes = [np.arange(n) / n for _ in range(dim)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls.from_grid(np.asarray(f(mesh), dtype=float), cut)

    def copy(self):
        return FourierSeries(self.coeffs.copy(), symmetrize=False)

    def with_cut(self, cut):
        """Pad with zeros or crop to a new mode box."""
        if self.dim == 0 or cut == self.cut:
            return self.copy()
        out = FourierSeries.zero(self.dim, cut)
        m = min(cut, self.cut)
        src = tuple(slice(self.cut - m, self.cut + m + 1) for _ in range(self.dim))
        dst = tuple(slice(cut - m, cut + m + 1) for _ in range(self.dim))
        out.coeffs[dst] = self.coeffs[src]
        return out

    # ----- basic queries ------------------------------------------------

    def average(self):
        c0 = self.coeffs[(self.cut,) * self.dim if self.dim else ()]
        return float(np.real(c0))

    def oscillatory(self):
        out = self.copy()
        out.coeffs[(self.cut,) * self.dim if self.dim else ()] = 0.0
        return out

    def coeff_norm(self):
        return float(np.sum(np.abs(self.coeffs)))

    def is_zero(self, tol=0.0):
        return float(np.max(np.abs(self.coeffs))) <= tol if self.coeffs.size else True

    def symmetry_defect(self):
        if self.dim == 0:
            return abs(float(self.coeffs.imag))
        return float(np.max(np.abs(self.coeffs - np.conj(np.flip(self.coeffs)))))

    # ----- arithmetic ---------------------------------------------------

    def _check_compatible(self, other):
        if self.dim != other.dim or self.cut != other.cut:
            raise DimensionMismatch(
                "series boxes differ: dim %d cut %d vs dim %d cut %d"
                % (self.dim, self.cut, other.dim, other.cut)
            )

    def __add__(self, other):
        if isinstance(other, FourierSeries):
            self._check_compatible(other)
            return FourierSeries(self.coeffs + other.coeffs, symmetrize=False)
        out = self.copy()
        out.coeffs[(self.cut,) * self.dim if self.dim else ()] += float(other)
        return out

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, FourierSeries) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __neg__(self):
        return FourierSeries(-self.coeffs, symmetrize=False)

    def __mul__(self, other):
        if not isinstance(other, FourierSeries):
            return FourierSeries(self.coeffs * float(other), symmetrize=False)
        self._check_compatible(other)
        if self.dim == 0:
            return FourierSeries(self.coeffs * other.coeffs, symmetrize=False)
        full = signal.fftconvolve(self.coeffs, other.coeffs)
        m = self.cut
        center = tuple(slice(m, 3 * m + 1) for _ in range(self.dim))
        return FourierSeries(full[center])

    __rmul__ = __mul__

    def shift(self, delta):
        """Compose with the rigid rotation theta -> theta + delta."""
        if self.dim == 0:
            return self.copy()
        delta = np.asarray(delta, dtype=float)
        assert delta.shape == (self.dim,)
        phase = np.exp(TWO_PI_I * _mode_dot(self.cut, self.dim, delta))
        return FourierSeries(self.coeffs * phase)

    def diff(self, axis):
        """Partial derivative along one angular axis."""
        assert 0 <= axis < self.dim
        vec = np.zeros(self.dim)
        vec[axis] = 1.0
        factor = TWO_PI_I * _mode_dot(self.cut, self.dim, vec)
        return FourierSeries(self.coeffs * factor)

    # ----- evaluation ---------------------------------------------------

    def eval(self, theta=None):
        """Evaluate at angles.

        ``theta`` has shape (dim,) for a single point or (..., dim) for a
        batch; returns a real float or a real array of the batch shape.
        Complexified angles are accepted (analytic continuation off the real
        torus); the result is then complex.
        """
        if self.dim == 0:
            val = float(self.coeffs.real)
            if theta is None:
                return val
            theta = np.asarray(theta, dtype=float)
            batch = theta.shape[:-1] if theta.ndim else ()
            return np.full(batch, val) if batch else val
        complex_in = np.iscomplexobj(theta)
        theta = np.asarray(theta) if complex_in else np.asarray(theta, dtype=float)
        single = theta.shape == (self.dim,)
        pts = theta.reshape(-1, self.dim)
        modes = _mode_range(self.cut)
        r = np.einsum(
            "bi,i...->b...", np.exp(TWO_PI_I * np.outer(pts[:, 0], modes)), self.coeffs
        )
        for a in range(1, self.dim):
            r = np.einsum(
                "bi,bi...->b...", np.exp(TWO_PI_I * np.outer(pts[:, a], modes)), r
            )
        vals = r if complex_in else np.real(r)
        if single:
            return complex(vals[0]) if complex_in else float(vals[0])
        return vals.reshape(theta.shape[:-1])

    def values_on_grid(self, n):
        """Real values on the uniform n-per-axis grid (FFT synthesis)."""
        if self.dim == 0:
            return np.full((), float(self.coeffs.real))
        assert n >= 2 * self.cut + 1
        big = np.zeros((n,) * self.dim, dtype=complex)
        picks = [(_mode_range(self.cut)) % n for _ in range(self.dim)]
        big[np.ix_(*picks)] = self.coeffs
        return np.real(np.fft.ifftn(big) * big.size)

    def sup_grid(self, n=None):
        if self.dim == 0:
            return abs(float(self.coeffs.real))
        if n is None:
            n = max(64, 4 * self.cut + 1)
        return float(np.max(np.abs(self.values_on_grid(n))))

    # ----- interchange --------------------------------------------------

    def to_payload(self, drop_below=0.0):
        """Sparse half-spectrum payload: mode 0 plus lexicographically
        positive modes; the mirror half is implied by realness."""
        entries = []
        if self.dim == 0:
            v = complex(self.coeffs)
            if abs(v) > drop_below:
                entries.append([[], v.real, v.imag])
            return {"dim": 0, "cut": 0, "modes": entries}
        it = np.ndindex(*self.coeffs.shape)
        for idx in it:
            k = tuple(i - self.cut for i in idx)
            first = next((x for x in k if x != 0), 0)
            if first < 0:
                continue
            v = complex(self.coeffs[idx])
            if abs(v) <= drop_below:
                continue
            entries.append([list(k), v.real, v.imag])
        entries.sort(key=lambda e: e[0])
        return {"dim": self.dim, "cut": self.cut, "modes": entries}

    @classmethod
    def from_payload(cls, payload):
        dim = int(payload["dim"])
        cut = int(payload["cut"])
        s = cls.zero(dim, cut)
        for k, re, im in payload["modes"]:
            k = tuple(int(x) for x in k)
            idx = tuple(x + cut for x in k) if dim else ()
            s.coeffs[idx] = complex(re, im)
            if dim and any(x != 0 for x in k):
                s.coeffs[tuple(-x + cut for x in k)] = complex(re, -im)
        return cls(s.coeffs)

    def __repr__(self):
        return "FourierSeries(dim=%d, cut=%d, |c|_1=%.3e)" % (
            self.dim,
            self.cut,
            self.coeff_norm(),
        )


# ----- cohomological equations -------------------------------------------


def _check_zero_average(h, avg_tol):
    if avg_tol is None:
        return
    scale = max(1.0, h.coeff_norm())
    if abs(h.average()) > avg_tol * scale:
        raise NonZeroAverage(
            "right-hand side has average %.3e (tolerance %.3e)"
            % (h.average(), avg_tol * scale)
        )


def _guarded_divide(h, divisor, floor):
    """h.coeffs / divisor with the zero mode forced to 0 and a floor check
    applied only where the numerator is actually nonzero."""
    mag = np.abs(divisor)
    need = np.abs(h.coeffs) > 0.0
    center = (h.cut,) * h.dim if h.dim else ()
    need[center] = False
    bad = need & (mag < floor)
    if np.any(bad):
        idx = np.unravel_index(
            np.argmin(np.where(bad, mag, np.inf)), mag.shape if h.dim else (1,)
        )
        mode = tuple(int(i) - h.cut for i in idx) if h.dim else ()
        raise SmallDivisorUnderflow(mode, float(mag[idx] if h.dim else mag), floor)
    safe = np.where(mag < floor, 1.0, divisor)
    out = np.where(need, h.coeffs / safe, 0.0)
    return FourierSeries(np.asarray(out, dtype=complex).reshape(h.coeffs.shape))


def solve_sd_map(h, omega, floor=1e-12, avg_tol=1e-10):
    """Solve phi(theta + omega) - phi(theta) = h(theta) with zero average.

    Coefficients: phi_k = h_k / (e^{2 pi i k.omega} - 1) for k != 0 and
    phi_0 = 0.  Raises when the mean of h is not (numerically) zero or a
    needed divisor falls below ``floor``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if h.dim != omega.size:
        raise DimensionMismatch("omega length %d vs series dim %d" % (omega.size, h.dim))
    _check_zero_average(h, avg_tol)
    if h.dim == 0:
        return FourierSeries.zero(0, 0)
    divisor = np.exp(TWO_PI_I * _mode_dot(h.cut, h.dim, omega)) - 1.0
    return _guarded_divide(h, divisor, floor)


def solve_sd_flow(h, freqs, floor=1e-12, avg_tol=1e-10):
    """Solve the directional derivative equation freqs . grad phi = h.

    Coefficients: phi_k = h_k / (2 pi i k.freqs) for k != 0, phi_0 = 0.
    The floor guards |k.freqs| itself.
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    if h.dim != freqs.size:
        raise DimensionMismatch("freqs length %d vs series dim %d" % (freqs.size, h.dim))
    _check_zero_average(h, avg_tol)
    if h.dim == 0:
        return FourierSeries.zero(0, 0)
    kf = _mode_dot(h.cut, h.dim, freqs)
    mag = np.abs(kf)
    need = np.abs(h.coeffs) > 0.0
    need[(h.cut,) * h.dim] = False
    bad = need & (mag < floor)
    if np.any(bad):
        idx = np.unravel_index(np.argmin(np.where(bad, mag, np.inf)), mag.shape)
        mode = tuple(int(i) - h.cut for i in idx)
        raise SmallDivisorUnderflow(mode, float(mag[idx]), floor)
    safe = np.where(mag < floor, 1.0, TWO_PI_I * kf)
    out = np.where(need, h.coeffs / safe, 0.0)
    return FourierSeries(np.asarray(out, dtype=complex))


def diophantine_margin(freqs, k_max, kind="map"):
    """Smallest divisor magnitude over the punctured mode box |k|_inf <= k_max.

    ``kind="map"`` measures |e^{2 pi i k.freqs} - 1|, ``kind="flow"``
    measures |k.freqs|.  Returns (margin, mode achieving it).
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    dim = freqs.size
    if dim == 0:
        return float("inf"), ()
    kf = _mode_dot(k_max, dim, freqs)
    if kind == "map":
        mag = np.abs(np.exp(TWO_PI_I * kf) - 1.0)
    elif kind == "flow":
        mag = np.abs(kf)
    else:
        raise ValueError("kind must be 'map' or 'flow'")
    mag[(k_max,) * dim] = np.inf
    idx = np.unravel_index(np.argmin(mag), mag.shape)
    return float(mag[idx]), tuple(int(i) - k_max for i in idx)


def reciprocal(f, floor=1e-12, oversample=8):
    """Truncated Fourier series of 1/f.

    Samples f on an oversampled grid, inverts pointwise and truncates back;
    raises CNotInvertible when |f| dips below ``floor`` on the grid.
    """
    if f.dim == 0:
        v = f.average()
        if abs(v) < floor:
            raise CNotInvertible("constant %.3e is numerically zero" % v)
        return FourierSeries.constant(1.0 / v, 0, 0)
    n = oversample * (2 * f.cut + 1)
    vals = f.values_on_grid(n)
    if float(np.min(np.abs(vals))) < floor:
        raise CNotInvertible(
            "function reaches %.3e on the grid" % float(np.min(np.abs(vals)))
        )
    return FourierSeries.from_grid(1.0 / vals, f.cut)
