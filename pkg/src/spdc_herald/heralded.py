"""Conditional signal states after an idler click.

The two-photon component is stored in product form,

    P2 rho2(t1, t2; t3, t4) = 4 * herald(t1, t4) * pair(t2, t3),

with kernels oriented as ``K(t, t') = <t|K|t'>``. A four-index array is
never built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bogoliubov import Quadrature, gauss_grid, graded_grid
from .correlators import (
    CWCorrelators,
    DeltaCorrelators,
    GaussianCorrelators,
    GridCorrelators,
    TwoPointSet,
)
from .errors import ProfileError, RegimeError, ZeroClickRate

#: Weak-drive flag threshold on the windowed pair number ``2 T x**2``.
WEAK_DRIVE_LIMIT = 0.1


@dataclass(frozen=True)
class ConditionalDensity:
    """Heralded signal state truncated at second order in the pump.

    Attributes:
        scenario: Pump scenario of the source.
        conditioning: ``"click"``, ``"averaged"`` or ``"windowed"``.
        points, weights: Quadrature on which the kernels are sampled.
        p1rho1: Unnormalized one-photon kernel ``P1 rho1(t1; t2)``.
        herald, pair: Two-index factors of ``P2 rho2``.
        P_S: Success probability (rate for CW).
        P1, P2: Photon-number populations.
        orders: Order-separated pieces of ``p1rho1`` keyed by power of x,
            when the assembly produced them.
        antihermitian: Relative anti-Hermitian part removed by symmetrization.
        flags: Regime warnings.
    """

    scenario: str
    conditioning: str
    points: np.ndarray
    weights: np.ndarray
    p1rho1: np.ndarray
    herald: np.ndarray
    pair: np.ndarray
    P_S: float
    P1: float
    P2: float
    orders: dict | None = None
    antihermitian: float = 0.0
    flags: tuple = ()
    extras: dict = field(default_factory=dict)

    @property
    def P0(self) -> float:
        return 1.0 - self.P1 - self.P2

    @property
    def rho1(self) -> np.ndarray:
        """Normalized one-photon kernel."""
        return self.p1rho1 / self.P1

    def rho2_element(self, i1, i2, i3, i4) -> complex:
        """``<t_i1, t_i2| P2 rho2 |t_i3, t_i4>`` on the grid, symmetrized."""
        h, p = self.herald, self.pair
        return (
            h[i1, i4] * p[i2, i3] + h[i2, i3] * p[i1, i4]
            + h[i1, i3] * p[i2, i4] + h[i2, i4] * p[i1, i3]
        )


@dataclass(frozen=True)
class ModeSpaceDensity:
    """Heralded state in the basis of independent squeezed modes.

    ``rho1`` is diagonal with weights ``P_{S,k} / P_S``; the two-photon state
    has ``2 P_{S,k}**2`` on ``|2_k>`` and ``P_{S,k} P_{S,l}`` on each ordered
    ``|1_k 1_l>``.
    """

    pair_probabilities: np.ndarray
    P_S: float
    P1: float
    P2: float
    scenario: str = "modes"
    conditioning: str = "modes"

    @property
    def P0(self) -> float:
        return 1.0 - self.P1 - self.P2

    @property
    def weights(self):
        return self.pair_probabilities / self.P_S


def _symmetrize(m):
    scale = np.abs(m).max()
    anti = float(np.abs(m - m.conj().T).max() / scale) if scale > 0 else 0.0
    return 0.5 * (m + m.conj().T), anti


def default_quadrature(cs: TwoPointSet, window=None):
    """Quadrature suited to a correlator set.

    Args:
        cs: Correlator set.
        window: ``(t_start, t_end)``; required for CW.

    Returns:
        Object with ``points`` and ``weights``.
    """
    if isinstance(cs, GridCorrelators):
        if window is None:
            return Quadrature(cs.points, cs.weights)
        sel = (cs.points >= window[0] - 1e-12) & (cs.points <= window[1] + 1e-12)
        return Quadrature(cs.points[sel], cs.weights[sel])
    if window is not None:
        return gauss_grid(window[0], window[1], panels=48, order=8, breakpoints=(0.0,))
    if isinstance(cs, DeltaCorrelators):
        return gauss_grid(0.0, 40.0, panels=40, order=12)
    if isinstance(cs, GaussianCorrelators):
        s = cs.sigma
        step = 0.05 if s < 2 else 0.1
        return graded_grid(8.0 * s, 30.0, step, s / 8.0)
    raise ProfileError("a window is required for a CW pump")


def _click_pieces(cs, tc, quad):
    t = quad.points
    A1 = cs._ab(t, np.full_like(t, tc), 1)
    A3 = cs._ab(t, np.full_like(t, tc), 3)
    M = cs._aa(t[None, :], t[:, None], 2)  # M[t1, t2] = <a^dag(t2) a(t1)>
    D2 = float(cs.herald_rate(tc, 2))
    D4 = float(cs.herald_rate(tc, 4))
    return A1, A3, M, D2, D4


def rho_conditional_at_click(cs: TwoPointSet, t_c: float, quad=None, window=None,
                             subtraction: bool = True) -> ConditionalDensity:
    """Signal state conditioned on an idler click at ``t_c``.

    Expands the exact conditional one-photon kernel to second order in x: the
    leading pair term, the photon-number correction, the uncorrelated-pair term
    and the two cross-subtraction integrals. Integrals over signal times run
    over the quadrature (the acceptance window, if given).

    Args:
        cs: Correlator set with orders up to ``<ab>_3`` and ``<a^dag a>_4``.
        t_c: Click time.
        quad: Quadrature; chosen from the scenario when omitted.
        window: ``(t_start, t_end)`` restricting the signal times.
        subtraction: Include the two cross-subtraction integrals; switching
            them off is a diagnostic only.

    Returns:
        The conditional density.

    Raises:
        ZeroClickRate: If no click can occur at ``t_c``.
    """
    if quad is None:
        quad = default_quadrature(cs, window)
    w = quad.weights
    A1, A3, M, D2, D4 = _click_pieces(cs, t_c, quad)
    if not D2 > 0:
        raise ZeroClickRate("zero click rate")
    r0 = np.outer(A1, A1.conj()) / D2
    nA = float(np.sum(w * np.diag(M).real))
    kA = float(np.sum(w * np.abs(A1) ** 2))
    MA = M @ (w * A1)                 # int M(t1, tau) A1(tau)
    AM = (w * A1.conj()) @ M          # int A1*(tau) M(tau, t2)
    r2 = (
        (np.outer(A1, A3.conj()) + np.outer(A3, A1.conj())) / D2
        - r0 * (D4 / D2 + nA)
        + M * (1.0 - kA / D2)
    )
    if subtraction:
        r2 = r2 - (np.outer(MA, A1.conj()) + np.outer(A1, AM)) / D2
    p1rho1, anti = _symmetrize(r0 + r2)
    P1 = float(np.sum(w * np.diag(p1rho1).real))
    herald, pair = r0, M
    P2 = _pair_trace(herald, pair, w)
    flags = ()
    if isinstance(cs, CWCorrelators):
        span = quad.points[-1] - quad.points[0]
        if 2.0 * span * cs.x**2 > WEAK_DRIVE_LIMIT:
            flags = ("outside weak-drive regime",)
    return ConditionalDensity(
        scenario=cs.scenario,
        conditioning="click" if window is None else "windowed",
        points=quad.points,
        weights=w,
        p1rho1=p1rho1,
        herald=herald,
        pair=pair,
        P_S=D2 + D4,
        P1=P1,
        P2=P2,
        orders={0: r0, 2: r2},
        antihermitian=anti,
        flags=flags,
        extras={"t_c": t_c, "P_S_leading": D2},
    )


def _pair_trace(herald, pair, w):
    """Two-photon population of ``4 herald(t1,t4) pair(t2,t3)``."""
    cross = np.einsum("i,ij,j,ji->", w, herald, w, pair)
    return float((cross + np.sum(w * np.diag(herald)) * np.sum(w * np.diag(pair))).real)


def rho_time_averaged(cs: TwoPointSet, quad=None) -> ConditionalDensity:
    """Signal state averaged over all click times of a pulsed source.

    Built from the click-time integrals

        K2(t1,t2) = int dtc <a(t1)b(tc)>_1 <a(t2)b(tc)>_1^*  (= <a^dag(t2)a(t1)>_2)
        K4(t1,t2) = int dtc [<a(t1)b(tc)>_3 <a(t2)b(tc)>_1^* + (1 <-> 3)]

    as ``P1 rho1 = K2 (1 - I2 - I4/I2)/I2 + K4/I2 + K2 - (K2 tr K2 + 2 K2 K2)/I2``
    with ``I_n`` the integrated click rate at order n. Only the full time axis
    is supported as the click window.

    Args:
        cs: Pulsed correlator set.
        quad: Quadrature over the emission time range.

    Returns:
        The conditional density; ``extras["P1_scalar"]`` holds the population
        from the independent scalar expression.
    """
    if not cs.pulsed:
        raise ProfileError("time averaging is only defined for pulsed pumps")
    if quad is None:
        quad = default_quadrature(cs)
    t, w = quad.points, quad.weights
    AB1 = cs._ab(t[:, None], t[None, :], 1)   # [t, tc]
    AB3 = cs._ab(t[:, None], t[None, :], 3)
    K2 = (AB1 * w) @ AB1.conj().T
    K4 = (AB3 * w) @ AB1.conj().T
    K4 = K4 + K4.conj().T
    I2 = float(np.sum(w * np.diag(K2).real))
    if not I2 > 0:
        raise ZeroClickRate("zero click rate")
    I4 = float(np.sum(w * cs.herald_rate(t, 4)))
    KK = (K2 * w) @ K2
    p1rho1 = (
        K2 * (1.0 - I2 - I4 / I2) / I2 + K4 / I2 + K2 - (K2 * I2 + 2.0 * KK) / I2
    )
    p1rho1, anti = _symmetrize(p1rho1)
    P1 = float(np.sum(w * np.diag(p1rho1).real))
    trK4 = float(np.sum(w * np.diag(K4).real))
    trKK = float(np.sum(w * np.diag(KK).real))
    P1_scalar = 1.0 - I2 + (trK4 - 2.0 * trKK - I4) / I2
    herald, pair = K2 / I2, K2
    return ConditionalDensity(
        scenario=cs.scenario,
        conditioning="averaged",
        points=t,
        weights=w,
        p1rho1=p1rho1,
        herald=herald,
        pair=pair,
        P_S=I2 + I4,
        P1=P1,
        P2=_pair_trace(herald, pair, w),
        orders={0: K2 / I2, 2: p1rho1 - K2 / I2},
        antihermitian=anti,
        extras={"P1_scalar": P1_scalar, "I2": I2, "I4": I4, "K2": K2, "P_S_leading": I2},
    )


def rho_windowed_cw(x: float, T: float, quad=None, strict: bool = False) -> ConditionalDensity:
    """Closed-form CW state with signal photons accepted within ``T`` of the click.

    Args:
        x: Pump strength.
        T: Acceptance window length, centred on the click at t = 0.
        quad: Quadrature over ``[-T/2, T/2]``.
        strict: Raise instead of flagging outside the weak-drive regime.

    Returns:
        The conditional density with closed-form kernels and populations.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    flags = ()
    if 2.0 * T * x * x > WEAK_DRIVE_LIMIT:
        if strict:
            raise RegimeError("outside weak-drive regime")
        flags = ("outside weak-drive regime",)
    if quad is None:
        quad = gauss_grid(-T / 2, T / 2, panels=48, order=8, breakpoints=(0.0,))
    t, w = quad.points, quad.weights
    a1, a2 = np.abs(t)[:, None], np.abs(t)[None, :]
    d = np.abs(t[:, None] - t[None, :])
    e = np.exp(-T / 2)
    x2 = x * x
    p1rho1 = (
        0.5 * np.exp(-0.5 * (a1 + a2)) * (1.0 - x2 * (2.0 + T + (1.0 - e) * (6.0 + a1 + a2 + T)))
        + 0.5 * x2 * np.exp(-0.5 * (-a1 + a2 + T)) * (3.0 + T / 2 - a1)
        + 0.5 * x2 * np.exp(-0.5 * (a1 - a2 + T)) * (3.0 + T / 2 - a2)
        + x2 * np.exp(-0.5 * (d + T)) * (2.0 + d)
    ).astype(complex)
    herald = (0.5 * np.exp(-0.5 * (a1 + a2))).astype(complex)
    pair = (2.0 * x2 * np.exp(-0.5 * d) * (1.0 + 0.5 * d)).astype(complex)
    P1, P2 = cw_populations(x, T)
    return ConditionalDensity(
        scenario="cw",
        conditioning="windowed",
        points=t,
        weights=w,
        p1rho1=p1rho1,
        herald=herald,
        pair=pair,
        P_S=2.0 * x2,
        P1=P1,
        P2=P2,
        orders={0: herald, 2: p1rho1 - herald},
        flags=flags,
        extras={"T": T, "P_S_leading": 2.0 * x2},
    )


def cw_populations(x: float, T: float):
    """Closed-form ``(P1, P2)`` for the CW acceptance window."""
    e = np.exp(-T / 2)
    x2 = x * x
    P1 = 1.0 - e - x2 * (10.0 + 2.0 * T - e * (18.0 + 9.0 * T + T * T / 4) + 2.0 * e * e * (4.0 + T))
    P2 = x2 * (10.0 + 2.0 * T - e * (T * T / 4 + 6.0 * T + 14.0) + e * e * (T + 4.0))
    return float(P1), float(P2)


def independent_modes_herald(dec) -> ModeSpaceDensity:
    """Heralded state of independent two-mode squeezed modes.

    Args:
        dec: Bloch-Messiah decomposition (or any object with
            ``pair_probabilities``).

    Returns:
        Mode-space density with ``P1 = 1 - P_S - sum P_k**2 / P_S`` and
        ``P2 = (P_S**2 + sum P_k**2) / P_S``.
    """
    p = np.asarray(dec.pair_probabilities, dtype=float)
    P_S = float(np.sum(p))
    if p.size == 0 or not P_S > 0:
        raise ZeroClickRate("zero click rate")
    s2 = float(np.sum(p * p))
    return ModeSpaceDensity(
        pair_probabilities=p,
        P_S=P_S,
        P1=1.0 - P_S - s2 / P_S,
        P2=(P_S * P_S + s2) / P_S,
    )
