"""Non-perturbative reference values from exact Gaussian moments.

The emitted signal/idler light is a zero-mean Gaussian state, so every
normally ordered correlation function is a sum over pairings of two-point
functions. Only four contractions are nonzero for the pair-creating cavity:
``<a^dag a>``, ``<b^dag b>``, ``<a b>`` and ``<a^dag b^dag>``. Conditional
correlations after an idler click are converted into photon-number resolved
density matrix elements by the alternating inversion sum

    P_n rho_n(t; t') = sum_k (-1)^k / k! int dtau_1..dtau_k C_{2(n+k)}(tau.., t, t', ..tau).

Two evaluation paths are provided: element-wise (any correlation evaluator,
small instances) and contracted (whole kernels and traces on a grid, built as
tensor networks over the pairing sum).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from spdc_herald.bogoliubov import check_commutation_identities
from spdc_herald.errors import IdentityViolation, UnsupportedOrder, ZeroClickRate

#: Largest photon number supported by ``conditional_correlation``.
MAX_ORDER = 3

# operator kinds: creation and annihilation on the signal (a) and idler (b)
AD, A, BD, B = "ad", "a", "bd", "b"


@dataclass(frozen=True)
class MomentSet:
    """Two-point moments of a Gaussian signal/idler state.

    Signal and idler are sampled on their own node sets (identical for
    kernels built on a time grid, different for synthetic mode-space states).

    Attributes:
        points: Signal nodes.
        weights: Signal quadrature weights.
        n_aa: ``n_aa[i, j] = <a^dag(t_i) a(t_j)>``.
        m_ab: ``m_ab[i, c] = <a(t_i) b(s_c)>``.
        n_bb: ``n_bb[c, d] = <b^dag(s_c) b(s_d)>``.
        herald_points: Idler nodes.
        herald_weights: Idler quadrature weights.
    """

    points: np.ndarray
    weights: np.ndarray
    n_aa: np.ndarray = field(repr=False)
    m_ab: np.ndarray = field(repr=False)
    n_bb: np.ndarray = field(repr=False)
    herald_points: np.ndarray = field(repr=False)
    herald_weights: np.ndarray = field(repr=False)

    def window(self, t_start: float, t_end: float) -> "MomentSet":
        """Restrict the signal nodes to ``[t_start, t_end]``; the idler keeps all nodes."""
        sel = (self.points >= t_start - 1e-12) & (self.points <= t_end + 1e-12)
        return MomentSet(
            points=self.points[sel],
            weights=self.weights[sel],
            n_aa=self.n_aa[np.ix_(sel, sel)],
            m_ab=self.m_ab[sel],
            n_bb=self.n_bb,
            herald_points=self.herald_points,
            herald_weights=self.herald_weights,
        )

    def signal_index(self, t) -> int:
        return _node(self.points, t)

    def herald_index(self, t) -> int:
        return _node(self.herald_points, t)

    def covariance(self) -> np.ndarray:
        """Symmetrized quadrature covariance of the discrete modes, vacuum = identity."""
        sa = np.sqrt(self.weights)
        sb = np.sqrt(self.herald_weights)
        na, nb = len(sa), len(sb)
        N = np.zeros((na + nb, na + nb), dtype=complex)
        M = np.zeros_like(N)
        N[:na, :na] = sa[:, None] * self.n_aa * sa[None, :]
        N[na:, na:] = sb[:, None] * self.n_bb * sb[None, :]
        mab = sa[:, None] * self.m_ab * sb[None, :]
        M[:na, na:] = mab
        M[na:, :na] = mab.T
        eye = np.eye(na + nb)
        xx = eye + 2.0 * (N.real + M.real)
        pp = eye + 2.0 * (N.real - M.real)
        xp = 2.0 * (M.imag + N.imag)
        return np.block([[xx, xp], [xp.T, pp]])

    def min_symplectic_eigenvalue(self) -> float:
        """Smallest symplectic eigenvalue of ``covariance()``; at least 1 for a physical state."""
        s = self.covariance()
        m = s.shape[0] // 2
        omega = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
        ev = np.abs(np.linalg.eigvals(1j * omega @ s))
        return float(ev.min())


def _node(points, t) -> int:
    i = int(np.argmin(np.abs(points - t)))
    scale = np.abs(np.diff(points)).min() if len(points) > 1 else 1.0
    if abs(points[i] - t) > 1e-9 * max(scale, 1.0):
        raise ValueError(f"time {t} is not a node")
    return i


def exact_moments(k, gate: float = 1e-6) -> MomentSet:
    """All-order moments of the sampled kernels with vacuum inputs.

    Args:
        k: A ``KernelGrid``.
        gate: Largest tolerated commutation-identity residual.

    Returns:
        The moment set on the kernel grid.

    Raises:
        IdentityViolation: If the discrete map is not symplectic to ``gate``.
    """
    report = check_commutation_identities(k)
    if report.worst > gate:
        raise IdentityViolation("identities violated, refine grid")
    U, V = k.operators()
    om = k.cell_weight
    t = k.grid.points
    w = np.full(len(t), om)
    n_aa = (V.conj() @ V.T) / om
    m_ab = (U @ V.T) / om
    return MomentSet(points=t, weights=w, n_aa=n_aa, m_ab=m_ab, n_bb=n_aa.copy(),
                     herald_points=t, herald_weights=w)


def mode_space_moments(xis, herald, phase: complex = 1j) -> MomentSet:
    """Moments of independent two-mode squeezed pairs with a single herald mode.

    Signal node ``l`` is the signal mode of pair ``l``; the single idler node
    is the mode ``sum_l herald[l] b_l``.

    Args:
        xis: Squeezing parameters.
        herald: Idler mode coefficients.
        phase: Phase of ``<a_l b_l>``.

    Returns:
        A moment set with unit weights.
    """
    xis = np.asarray(xis, dtype=float)
    h = np.asarray(herald, dtype=complex)
    s2 = np.sinh(xis) ** 2
    sc = np.sinh(xis) * np.cosh(xis)
    return MomentSet(
        points=np.arange(len(xis), dtype=float),
        weights=np.ones(len(xis)),
        n_aa=np.diag(s2).astype(complex),
        m_ab=(phase * sc * h)[:, None],
        n_bb=np.array([[np.sum(np.abs(h) ** 2 * s2)]], dtype=complex),
        herald_points=np.zeros(1),
        herald_weights=np.ones(1),
    )


# ---------------------------------------------------------------- pairings

_ALLOWED = {(AD, A), (BD, B), (AD, BD), (BD, AD), (A, B), (B, A)}


@lru_cache(maxsize=None)
def _pairings(kinds: tuple) -> tuple:
    """Perfect matchings of positions whose contractions can be nonzero."""

    def rec(rest):
        if not rest:
            yield ()
            return
        first = rest[0]
        for j in range(1, len(rest)):
            if (kinds[first], kinds[rest[j]]) in _ALLOWED:
                for tail in rec(rest[1:j] + rest[j + 1:]):
                    yield ((first, rest[j]),) + tail

    return tuple(rec(tuple(range(len(kinds)))))


def _normal_ops(n_ann, n_cre):
    """Kinds of ``b^dag a^dag.. a.. b`` in normal order."""
    return (BD,) + (AD,) * n_cre + (A,) * n_ann + (B,)


def _contraction(m: MomentSet, k1, i1, k2, i2):
    """Two-point function of operators ``(k1, i1)`` before ``(k2, i2)``."""
    if (k1, k2) == (AD, A):
        return m.n_aa[i1, i2]
    if (k1, k2) == (BD, B):
        return m.n_bb[i1, i2]
    if (k1, k2) == (A, B):
        return m.m_ab[i1, i2]
    if (k1, k2) == (B, A):
        return m.m_ab[i2, i1]
    if (k1, k2) == (AD, BD):
        return np.conj(m.m_ab[i1, i2])
    if (k1, k2) == (BD, AD):
        return np.conj(m.m_ab[i2, i1])
    return 0.0


def conditional_correlation(m: MomentSet, t_c: float, n: int, times) -> complex:
    """Exact conditional correlation after an idler click.

    ``C_2n = <b^dag(t_c) a^dag(t_{n+1})..a^dag(t_2n) a(t_1)..a(t_n) b(t_c)> / <b^dag b>(t_c)``
    evaluated as a sum over Wick pairings.

    Args:
        m: Moment set.
        t_c: Click time (an idler node).
        n: Photon number, at most 3.
        times: ``2n`` signal nodes, annihilation arguments first.

    Returns:
        The correlation value.

    Raises:
        UnsupportedOrder: If ``n > 3``.
        ZeroClickRate: If the click rate vanishes at ``t_c``.
    """
    if n > MAX_ORDER or n < 0:
        raise UnsupportedOrder(f"conditional correlations are supported for n <= {MAX_ORDER}")
    if len(times) != 2 * n:
        raise ValueError("expected 2n time arguments")
    c = m.herald_index(t_c)
    D = m.n_bb[c, c].real
    if not D > 0:
        raise ZeroClickRate("zero click rate")
    idx = [m.signal_index(t) for t in times]
    return _numerator(m, c, idx[:n], idx[n:]) / D


def _numerator(m, c, ann, cre):
    kinds = _normal_ops(len(ann), len(cre))
    labels = (c,) + tuple(cre) + tuple(ann) + (c,)
    total = 0.0 + 0.0j
    for pairing in _pairings(kinds):
        term = 1.0 + 0.0j
        for p, q in pairing:
            term *= _contraction(m, kinds[p], labels[p], kinds[q], labels[q])
            if term == 0:
                break
        total += term
    return total


# ------------------------------------------------------- element-wise inversion

@dataclass(frozen=True)
class InversionResult:
    """One inverted density-matrix element.

    Attributes:
        value: ``P_n rho_n`` element.
        terms: Contribution of each ``k``.
        tail: Magnitude of the last retained term, an estimate of the truncation error.
        diverging: True when the partial-sum magnitudes never decrease.
    """

    value: complex
    terms: tuple
    tail: float
    diverging: bool


def density_from_correlations(correlation, n: int, times, k_max: int = 2, weights=None) -> InversionResult:
    """Invert conditional correlations into an ``n``-photon density element.

    Args:
        correlation: ``correlation(ann, cre)`` returning the normally ordered
            correlation for node-index tuples ``ann`` and ``cre``.
        n: Photon number.
        times: ``2n`` node indices, annihilation arguments first.
        k_max: Highest number of integrated extra photons.
        weights: Quadrature weights of the nodes.

    Returns:
        The element and the per-order terms.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    if len(times) != 2 * n:
        raise ValueError("expected 2n node indices")
    w = np.asarray(weights, dtype=float)
    ann, cre = tuple(times[:n]), tuple(times[n:])
    terms = []
    for k in range(k_max + 1):
        acc = 0.0 + 0.0j
        for taus in itertools.product(range(len(w)), repeat=k):
            wt = np.prod(w[list(taus)]) if k else 1.0
            acc += wt * correlation(taus + ann, cre + taus[::-1])
        terms.append((-1) ** k * acc / math.factorial(k))
    mags = [abs(t) for t in terms]
    partial = np.abs(np.cumsum(terms))
    diverging = len(partial) > 1 and bool(np.all(np.diff(partial) >= 0)) and partial[-1] > 0
    if diverging:
        warnings.warn("inversion partial sums do not decrease; outside weak-drive validity", RuntimeWarning)
    return InversionResult(value=complex(sum(terms)), terms=tuple(terms), tail=mags[-1], diverging=diverging)


def forward_correlation(density, n: int, times, k_max: int, weights) -> complex:
    """Correlation rebuilt from density elements.

    ``C_2n(t) = sum_k 1/k! int dtau P_{n+k} rho_{n+k}(tau.., t; t', ..tau)``.

    Args:
        density: ``density(ann, cre)`` returning ``P_m rho_m`` for node tuples of length m.
        n: Order of the correlation.
        times: ``2n`` node indices.
        k_max: Highest extra photon number.
        weights: Quadrature weights.

    Returns:
        The correlation value.
    """
    w = np.asarray(weights, dtype=float)
    ann, cre = tuple(times[:n]), tuple(times[n:])
    total = 0.0 + 0.0j
    for k in range(k_max + 1):
        for taus in itertools.product(range(len(w)), repeat=k):
            wt = np.prod(w[list(taus)]) if k else 1.0
            total += wt * density(taus + ann, cre + taus[::-1]) / math.factorial(k)
    return complex(total)


# ------------------------------------------------------ contracted evaluation

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _network_sum(m: MomentSet, n, k, herald_vec, free):
    """Sum over pairings of ``int C_numerator`` as tensor networks.

    Annihilation arguments are ``tau_1..tau_k, t_1..t_n`` and creation arguments
    ``t'_1..t'_n, tau_k..tau_1``. With ``free`` the ``t`` and ``t'`` labels are
    output indices (n must be 1); otherwise ``t_i`` and ``t'_i`` share a label
    and are integrated.
    """
    tau = [f"k{i}" for i in range(k)]
    ts = [f"t{i}" for i in range(n)]
    tps = [f"p{i}" for i in range(n)] if free else ts
    ann_labels = tau + ts
    cre_labels = tps + tau[::-1]
    kinds = _normal_ops(len(ann_labels), len(cre_labels))
    labels = ["c"] + cre_labels + ann_labels + ["c"]
    names = sorted(set(labels))
    letter = {name: _LETTERS[i] for i, name in enumerate(names)}
    w = m.weights
    out = "".join(letter[x] for x in (ts + tps if free else []))
    total = 0.0
    for pairing in _pairings(kinds):
        ops, subs = [], []
        for p, q in pairing:
            kp, kq = kinds[p], kinds[q]
            lp, lq = labels[p], labels[q]
            mat = _contraction_matrix(m, kp, kq)
            if lp == lq:
                ops.append(np.diagonal(mat).copy())
                subs.append(letter[lp])
            else:
                ops.append(mat)
                subs.append(letter[lp] + letter[lq])
        for name in names:
            if name == "c":
                ops.append(herald_vec)
                subs.append(letter["c"])
            elif not (free and name in ts + tps):
                ops.append(w)
                subs.append(letter[name])
        expr = ",".join(subs) + "->" + out
        total = total + np.einsum(expr, *ops, optimize="greedy")
    return total


def _contraction_matrix(m, k1, k2):
    if (k1, k2) == (AD, A):
        return m.n_aa
    if (k1, k2) == (BD, B):
        return m.n_bb
    if (k1, k2) == (A, B):
        return m.m_ab
    if (k1, k2) == (B, A):
        return m.m_ab.T
    if (k1, k2) == (AD, BD):
        return m.m_ab.conj()
    if (k1, k2) == (BD, AD):
        return m.m_ab.conj().T
    raise AssertionError("zero contraction")


@dataclass(frozen=True)
class OracleDensity:
    """Photon-number resolved conditional state from the exact moments.

    Attributes:
        points: Signal nodes.
        weights: Signal weights.
        P0, P1, P2: Populations.
        p1rho1: ``P1 rho1`` kernel.
        purity: Purity of the one-photon state.
        tails: Magnitude of the last retained inversion term for each population.
    """

    points: np.ndarray
    weights: np.ndarray
    P0: float
    P1: float
    P2: float
    p1rho1: np.ndarray = field(repr=False)
    purity: float
    tails: dict


def oracle_density(m: MomentSet, t_c: float | None = None, k_max: int = 2) -> OracleDensity:
    """Exact conditional populations and one-photon kernel on the signal nodes.

    Args:
        m: Moment set (restricted to the acceptance window if any).
        t_c: Click time; ``None`` averages over all idler nodes weighted by the
            click rate, as for a pulsed source.
        k_max: Highest number of integrated extra photons in the inversion.

    Returns:
        The oracle state.

    Raises:
        ZeroClickRate: If the click rate vanishes.
    """
    if t_c is None:
        hv = m.herald_weights.astype(float)
    else:
        hv = np.zeros(len(m.herald_points))
        hv[m.herald_index(t_c)] = 1.0
    D = float(np.sum(hv * np.diagonal(m.n_bb).real))
    if not D > 0:
        raise ZeroClickRate("zero click rate")
    pops, tails = {}, {}
    for n in (0, 1, 2):
        terms = [(-1) ** k / math.factorial(k) * _network_sum(m, n, k, hv, False).real / D
                 for k in range(k_max + 1)]
        pops[n] = sum(terms) / math.factorial(n)
        tails[n] = abs(terms[-1]) / math.factorial(n)
    kern = sum((-1) ** k / math.factorial(k) * _network_sum(m, 1, k, hv, True) / D
               for k in range(k_max + 1))
    kern = 0.5 * (kern + kern.conj().T)
    w = m.weights
    rho = kern / pops[1]
    sw = np.sqrt(w)
    purity = float(np.sum(np.abs(sw[:, None] * rho * sw[None, :]) ** 2))
    return OracleDensity(points=m.points, weights=w, P0=pops[0], P1=pops[1], P2=pops[2],
                         p1rho1=kern, purity=purity, tails=tails)


# ----------------------------------------------------------- synthetic states

class SyntheticState:
    """Heralded signal state of a few truncated two-mode squeezed pairs.

    The joint state of ``M`` signal/idler pairs is built in a Fock basis with
    at most ``max_photons + 1`` pairs per mode, an idler photon is removed in
    the herald mode, the idler is traced out and the signal state is
    restricted to at most ``max_photons`` photons and renormalized. Node ``l``
    is the signal mode ``a_l`` with unit weight.

    Args:
        xis: Squeezing parameters, one per pair.
        herald: Idler mode coefficients.
        max_photons: Photon-number cap of the signal state.
    """

    def __init__(self, xis, herald, max_photons: int = 2):
        xis = np.asarray(xis, dtype=float)
        self.modes = len(xis)
        self.cutoff = max_photons + 1
        self.weights = np.ones(self.modes)
        d = self.cutoff + 1
        amps = []
        for xi in xis:
            ns = np.arange(d)
            amps.append(np.tanh(xi) ** ns / np.cosh(xi))
        self._d = d
        # joint amplitude psi[n_1..n_M] on |n,n> pairs
        psi = amps[0]
        for a in amps[1:]:
            psi = np.multiply.outer(psi, a)
        # herald b_h acting on the idler: idler occupation n -> n-1 with sqrt(n)
        h = np.asarray(herald, dtype=complex)
        shape = (d,) * self.modes
        # joint tensor T[signal multi-index, idler multi-index]
        joint = np.zeros(shape + shape, dtype=complex)
        for occ in itertools.product(range(d), repeat=self.modes):
            amp = psi[occ]
            for l in range(self.modes):
                if occ[l] == 0:
                    continue
                idl = list(occ)
                idl[l] -= 1
                joint[occ + tuple(idl)] += h[l] * np.sqrt(occ[l]) * amp
        dim = d ** self.modes
        J = joint.reshape(dim, dim)
        rho = J @ J.conj().T
        total = np.array([sum(o) for o in itertools.product(range(d), repeat=self.modes)])
        keep = total <= max_photons
        rho = rho * np.outer(keep, keep)
        self.rho = rho / np.trace(rho).real
        self._lower = [self._lowering(l) for l in range(self.modes)]
        self._total = total

    def _lowering(self, l):
        d = self._d
        a = np.diag(np.sqrt(np.arange(1, d)), 1)
        ops = [np.eye(d)] * self.modes
        ops[l] = a
        out = ops[0]
        for o in ops[1:]:
            out = np.kron(out, o)
        return out

    def correlation(self, ann, cre) -> complex:
        """``Tr[a(ann..) rho a^dag(cre..)]``."""
        m = self.rho
        for l in ann:
            m = self._lower[l] @ m
        for l in cre:
            m = m @ self._lower[l].conj().T
        return complex(np.trace(m))

    def density(self, ann, cre) -> complex:
        """``<0| a(ann..) rho a^dag(cre..) |0>``, the ``P_n rho_n`` element."""
        m = self.rho
        for l in ann:
            m = self._lower[l] @ m
        for l in cre:
            m = m @ self._lower[l].conj().T
        return complex(m[0, 0])

    def population(self, n: int) -> float:
        """Probability of exactly ``n`` signal photons."""
        return float(np.sum(np.diagonal(self.rho).real[self._total == n]))
