"""Perturbative two-point correlators of the signal and idler fields.

Each correlator set provides, as functions of ``(t, t')``,

    aa(t, t', n) = <a^dag(t) a(t')> at order x**n   (n = 2, 4)
    ab(t, t', n) = <a(t) b(t')>      at order x**n   (n = 1, 3)

with ``<b^dag b>`` equal to ``<a^dag a>`` by the signal/idler exchange symmetry.
Values carry their powers of x, so summing orders gives the truncated series.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ndtr

from .errors import UnsupportedOrder
from .pump import CW, Delta, Gaussian


def _outer_args(t, tp):
    t = np.asarray(t, dtype=float)
    tp = np.asarray(tp, dtype=float)
    return np.broadcast_arrays(t, tp)


class TwoPointSet:
    """Common interface of the scenario-specific correlator sets."""

    scenario = ""
    pulsed = True
    public_orders = {"aa": (2, 4), "ab": (1, 3)}

    def corr_aa(self, t, tp, order):
        """``<a^dag(t) a(t')>`` at the given order."""
        if order not in self.public_orders["aa"]:
            raise UnsupportedOrder(f"<a^dag a> order {order} unavailable for {self.scenario}")
        return self._aa(*_outer_args(t, tp), order)

    def corr_ab(self, t, tp, order):
        """``<a(t) b(t')>`` at the given order."""
        if order not in self.public_orders["ab"]:
            raise UnsupportedOrder(f"<ab> order {order} unavailable for {self.scenario}")
        return self._ab(*_outer_args(t, tp), order)

    def herald_rate(self, t, order):
        """``<b^dag(t) b(t)>`` at the given order."""
        t = np.asarray(t, dtype=float)
        return self._aa(t, t, order).real

    # subclasses implement _aa/_ab for orders (2, 4) and (1, 3)
    def _aa(self, t, tp, order):
        raise NotImplementedError

    def _ab(self, t, tp, order):
        raise NotImplementedError


def _check(order, allowed, what):
    if order not in allowed:
        raise UnsupportedOrder(f"{what} order {order} not supported")


@dataclass(frozen=True)
class DeltaCorrelators(TwoPointSet):
    """Closed forms for the impulsive pump: a single exponential mode."""

    x: float
    scenario = "delta"

    @staticmethod
    def mode(t):
        """``phi(t) = exp(-t/2) Theta(t)`` with ``Theta(0) = 1``."""
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, np.exp(-0.5 * np.where(t >= 0, t, 0.0)), 0.0)

    def _aa(self, t, tp, order):
        _check(order, (2, 4), "<a^dag a>")
        coeff = self.x**2 if order == 2 else self.x**4 / 3.0
        return (coeff * self.mode(t) * self.mode(tp)).astype(complex)

    def _ab(self, t, tp, order):
        _check(order, (1, 3), "<ab>")
        coeff = self.x if order == 1 else 2.0 * self.x**3 / 3.0
        return -1j * coeff * self.mode(t) * self.mode(tp)


@dataclass(frozen=True)
class CWCorrelators(TwoPointSet):
    """Closed forms for the stationary CW pump."""

    x: float
    scenario = "cw"
    pulsed = False

    def _aa(self, t, tp, order):
        _check(order, (2, 4), "<a^dag a>")
        d = np.abs(t - tp)
        env = np.exp(-0.5 * d)
        if order == 2:
            return (self.x**2 * env * (2.0 + d)).astype(complex)
        return (self.x**4 * env * (8.0 + 4.0 * d + d * d + d**3 / 6.0)).astype(complex)

    def _ab(self, t, tp, order):
        _check(order, (1, 3), "<ab>")
        d = np.abs(t - tp)
        env = np.exp(-0.5 * d)
        if order == 1:
            return -1j * self.x * env
        return -1j * self.x**3 * env * (4.0 + d * (2.0 + 0.5 * d))


class _ExpMoments:
    """``E_k(t) = int_{-inf}^t exp(-(t-s)) X(s)**k ds`` for the Gaussian area X."""

    ORDER = 24
    KMAX = 4

    def __init__(self, x, sigma, reach=10.0):
        self.x, self.sigma = x, sigma
        self.lo, self.hi = -reach * sigma, reach * sigma
        n_pan = int(np.ceil((self.hi - self.lo) / min(sigma / 4.0, 0.25)))
        self.edges = np.linspace(self.lo, self.hi, n_pan + 1)
        self.gx, self.gw = np.polynomial.legendre.leggauss(self.ORDER)
        self._powers = np.arange(self.KMAX + 1)
        vals = np.zeros((n_pan + 1, self.KMAX + 1))
        vals[0, 0] = 1.0
        for j in range(n_pan):
            a, b = self.edges[j], self.edges[j + 1]
            vals[j + 1] = np.exp(-(b - a)) * vals[j] + self._panel(np.array([a]), np.array([b]))[0]
        self.at_edges = vals

    def area(self, t):
        return self.x * ndtr(np.asarray(t, dtype=float) / self.sigma)

    def __call__(self, t):
        """Array of shape ``t.shape + (5,)``."""
        t = np.asarray(t, dtype=float)
        flat, inverse = np.unique(t.ravel(), return_inverse=True)
        out = np.zeros((flat.size, self.KMAX + 1))
        left = flat <= self.lo
        right = flat >= self.hi
        mid = ~(left | right)
        out[left, 0] = 1.0
        if np.any(right):
            decay = np.exp(-(flat[right] - self.hi))[:, None]
            xk = self.x ** self._powers
            out[right] = decay * self.at_edges[-1] + (1.0 - decay) * xk
        if np.any(mid):
            tm = flat[mid]
            j = np.clip(np.searchsorted(self.edges, tm, side="right") - 1, 0, len(self.edges) - 2)
            a = self.edges[j]
            out[mid] = np.exp(-(tm - a))[:, None] * self.at_edges[j] + self._panel(a, tm)
        return out[inverse].reshape(t.shape + (self.KMAX + 1,))

    def _panel(self, a, t):
        # int_a^t exp(-(t-s)) X(s)**k ds for each t, all k
        half = 0.5 * (t - a)
        s = a[:, None] + half[:, None] * (self.gx[None, :] + 1.0)
        w = half[:, None] * self.gw[None, :] * np.exp(-(t[:, None] - s))
        X = self.area(s)
        return np.einsum("qn,qnk->qk", w, X[..., None] ** self._powers)


def _poly(*roots):
    """Coefficients in y of ``prod (r - y)``, shape ``(deg+1, *broadcast shape)``."""
    coeffs = np.ones((1,) + np.broadcast(*roots).shape)
    for r in roots:
        r = np.broadcast_to(r, coeffs.shape[1:])
        nxt = np.zeros((coeffs.shape[0] + 1,) + coeffs.shape[1:])
        nxt[:-1] += coeffs * r
        nxt[1:] -= coeffs
        coeffs = nxt
    return coeffs


def _pad(c, n=5):
    out = np.zeros((n,) + c.shape[1:])
    out[: c.shape[0]] = c
    return out


def _moment_sum(coeffs, E):
    # sum_k c_k E_k with E of shape (..., 5)
    return np.einsum("k...,...k->...", _pad(coeffs), E)


class GaussianCorrelators(TwoPointSet):
    """Gaussian pump, evaluated through one-dimensional exponential moments.

    Every multiple time integral of the perturbative kernels reduces to
    polynomials in the pump area at the endpoints times the moments
    ``E_k(t) = int exp(-(t-s)) X(s)**k ds``, which are tabulated with
    composite Gauss-Legendre panels.

    Args:
        x: Pump area.
        sigma: Pump standard deviation (units of 1/kappa).
    """

    scenario = "gaussian"
    public_orders = {"aa": (2,), "ab": (1,)}

    def __init__(self, x: float, sigma: float):
        self.profile = Gaussian(x, sigma)
        self.x, self.sigma = x, sigma

    @cached_property
    def moments(self):
        return _ExpMoments(self.x, self.sigma)

    def _aa(self, t, tp, order):
        _check(order, (2, 4), "<a^dag a>")
        m = np.minimum(t, tp)
        p, q = self.moments.area(t), self.moments.area(tp)
        E = self.moments(m)
        env = np.exp(-0.5 * np.abs(t - tp))
        if order == 2:
            c = _poly(p, q)
        else:
            c = (_mul(_poly(p, q), _pad(_poly(p, p), 3) + _pad(_poly(q, q), 3))) / 6.0
        return (env * _moment_sum(c, E)).astype(complex)

    def _ab(self, t, tp, order):
        _check(order, (1, 3), "<ab>")
        m = np.minimum(t, tp)
        p, q = self.moments.area(t), self.moments.area(tp)
        E = self.moments(m)
        env = np.exp(-0.5 * np.abs(t - tp))
        later = tp > t
        if order == 1:
            direct = q - p
            inner = _poly(q)
        else:
            direct = (q - p) ** 3 / 6.0
            inner = _pad(_poly(q, q, q), 4) / 6.0 + _pad(_poly(p, p, q), 4) / 2.0
        return 1j * env * (np.where(later, direct, 0.0) - _moment_sum(inner, E))

    def integrated_rate(self, order):
        """``int <b^dag b>`` over the whole time axis at the given order."""
        mo = self.moments
        xg, wg = np.polynomial.legendre.leggauss(mo.ORDER)
        a, b = mo.edges[:-1, None], mo.edges[1:, None]
        s = 0.5 * (b - a) * (xg + 1.0) + a
        w = 0.5 * (b - a) * wg
        total = np.sum(w * self.herald_rate(s, order))
        # beyond the pump the rate decays as exp(-(t - hi))
        return float(total + self.herald_rate(mo.hi, order))


def _mul(a, b):
    n = a.shape[0] + b.shape[0] - 1
    out = np.zeros((n,) + np.broadcast(a[0], b[0]).shape)
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            out[i + j] = out[i + j] + a[i] * b[j]
    return out


def make_correlators(profile) -> TwoPointSet:
    """Closed-form or semi-analytic correlator set for a pump profile."""
    if isinstance(profile, Delta):
        return DeltaCorrelators(profile.x)
    if isinstance(profile, CW):
        return CWCorrelators(profile.x)
    if isinstance(profile, Gaussian):
        return GaussianCorrelators(profile.x, profile.sigma)
    raise TypeError(f"unknown profile {profile!r}")


class GridCorrelators(TwoPointSet):
    """Order-expanded correlators of the discrete kernels on their own grid.

    Expands ``cosh``/``sinh`` of the sampled kernels in powers of the pump
    area and composes them with the same discrete operators used by the exact
    moment oracle, so that discretization errors are shared. Evaluation is
    only defined at grid nodes; ``weights`` gives the matching bin widths.
    """

    scenario = "grid"
    public_orders = {"aa": (2, 4), "ab": (1, 3)}

    def __init__(self, kernels):
        self.kernels = kernels
        self.points = kernels.grid.points
        om = kernels.cell_weight
        self.weights = np.full(len(self.points), om)
        self.pulsed = not isinstance(kernels.profile, CW)
        U0, U2, V1, V3 = _expanded_operators(kernels)
        self._mats = {
            ("aa", 2): (V1.conj() @ V1.T) / om,
            ("aa", 4): (V1.conj() @ V3.T + V3.conj() @ V1.T) / om,
            ("ab", 1): (U0 @ V1.T) / om,
            ("ab", 3): (U0 @ V3.T + U2 @ V1.T) / om,
        }

    def index(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.points, t), 0, len(self.points) - 1)
        j = np.clip(i - 1, 0, len(self.points) - 1)
        i = np.where(np.abs(self.points[j] - t) < np.abs(self.points[i] - t), j, i)
        if np.any(np.abs(self.points[i] - t) > 1e-9 * max(1.0, self.kernels.grid.step)):
            raise ValueError("grid correlators are only defined at grid nodes")
        return i

    def _aa(self, t, tp, order):
        _check(order, (2, 4), "<a^dag a>")
        return self._mats[("aa", order)][self.index(t), self.index(tp)]

    def _ab(self, t, tp, order):
        _check(order, (1, 3), "<ab>")
        return self._mats[("ab", order)][self.index(t), self.index(tp)]


def _expanded_operators(k):
    """Discrete operators split by power of the pump area."""
    g = k.grid
    t = g.points
    h = g.step
    om = k.cell_weight
    r = np.exp(-0.5 * h)
    from .pump import running_integral

    X = running_integral(k.profile, t, origin=g.t_min)
    X0 = running_integral(k.profile, g.t_min, side="left", origin=g.t_min)
    d = t[:, None] - t[None, :]
    env = np.where(d >= 0, np.exp(-0.5 * np.where(d >= 0, d, 0.0)), 0.0)
    scale = np.full(env.shape, om)
    np.fill_diagonal(scale, om * r / (1.0 + r))
    R = scale * env
    I = X[:, None] - X[None, :]
    tail = np.sqrt(1.0 - r * r) * np.exp(-0.5 * (t - g.t_min))
    It = X - X0
    n = len(t)

    def stack(body, col):
        out = np.empty((n, n + 1), dtype=complex)
        out[:, :n] = body
        out[:, n] = col
        return out

    U0 = stack(np.eye(n) - R, -tail)
    U2 = stack(-R * I**2 / 2.0, -tail * It**2 / 2.0)
    V1 = stack(1j * R * I, 1j * tail * It)
    V3 = stack(1j * R * I**3 / 6.0, 1j * tail * It**3 / 6.0)
    return U0, U2, V1, V3


@dataclass(frozen=True)
class SuccessProbability:
    """Heralding probability, or rate per unit time for CW."""

    value: float
    rate: float | None = None
    truncated: bool = False


def success_probability(cs: TwoPointSet, window=None, order: int = 2) -> SuccessProbability:
    """Probability of an idler click, integrated over a time window.

    Args:
        cs: Correlator set.
        window: ``(t_start, t_end)``; the full time axis when omitted. For CW it
            sets the duration that multiplies the click rate.
        order: 2 for the leading term, 4 to include the next correction.

    Returns:
        The success probability. ``truncated`` flags a window that cuts off
        more than 1e-6 of a pulsed emission.
    """
    orders = (2,) if order == 2 else (2, 4)
    if isinstance(cs, CWCorrelators):
        rate = float(sum(cs.herald_rate(0.0, n) for n in orders))
        span = None if window is None else window[1] - window[0]
        return SuccessProbability(rate * span if span is not None else rate, rate)
    if isinstance(cs, DeltaCorrelators):
        full = cs.x**2 + (cs.x**4 / 3.0 if order == 4 else 0.0)
        if window is None:
            return SuccessProbability(full)
        a, b = window
        frac = np.exp(-max(a, 0.0)) - np.exp(-max(b, 0.0))
        return SuccessProbability(full * frac, truncated=(1.0 - frac) > 1e-6)
    if isinstance(cs, GaussianCorrelators):
        full = sum(cs.integrated_rate(n) for n in orders)
        if window is None:
            return SuccessProbability(full)
        from scipy.integrate import quad

        a, b = window
        part = sum(
            quad(lambda s: cs.herald_rate(s, n), a, b, points=[0.0] if a < 0 < b else None,
                 limit=200, epsabs=1e-13)[0]
            for n in orders
        )
        return SuccessProbability(part, truncated=abs(full - part) > 1e-6 * full)
    if isinstance(cs, GridCorrelators):
        w = cs.weights
        val = sum(np.sum(w * np.diag(cs._mats[("aa", n)]).real) for n in orders)
        return SuccessProbability(float(val))
    raise TypeError("unsupported correlator set")
