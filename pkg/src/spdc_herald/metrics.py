"""Characterization parameters of a heralded single-photon state.

From the conditional state we extract the eigen-weights ``w_i`` and purity of
the one-photon component, the two-photon populations ``Q_ij`` on pairs of its
eigenmodes, the counting ratio ``Upsilon = P2 / (P1**2 P_S)``, ``g2 = 2 P2 / P1**2``
and the Hong-Ou-Mandel parameters ``V0`` and ``F``, where
``V = V0 (1 - F g2)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import PositivityError, RegimeError
from .heralded import ConditionalDensity, ModeSpaceDensity, cw_populations

#: Eigen-weights below this are dropped before computing purity and F.
WEIGHT_CUTOFF = 1e-10
#: g2 above which F is flagged as outside its linear-response regime.
G2_FLAG = 0.2


@dataclass(frozen=True)
class Characterization:
    """Characterization of one conditional state.

    ``Q`` is symmetric; for ``i != j`` an entry holds the population of the
    unordered pair state, so the upper triangle sums to one. ``upsilon`` is the
    counting ratio at leading order in the success probability, the regime in
    which it is efficiency independent; ``upsilon_raw`` is the same ratio
    formed from the second-order populations.
    """

    P_S: float
    P0: float
    P1: float
    P2: float
    upsilon: float
    weights: np.ndarray
    purity: float
    Q: np.ndarray
    V0: float
    F: float
    g2_pulse: float
    eta: float = 1.0
    upsilon_raw: float | None = None
    shortcut: dict | None = None
    flags: tuple = ()
    modes: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self, n_weights: int = 4) -> dict:
        """Flat JSON-friendly summary."""
        d = {k: float(v) for k, v in asdict(self).items()
             if k in ("P_S", "P0", "P1", "P2", "upsilon", "upsilon_raw", "purity", "V0", "F", "g2_pulse", "eta")
             and v is not None}
        for i in range(n_weights):
            d[f"w{i + 1}"] = float(self.weights[i]) if i < len(self.weights) else 0.0
        n = min(len(self.weights), 2)
        for i in range(n):
            for j in range(i, n):
                d[f"Q{i + 1}{j + 1}"] = float(self.Q[i, j])
        return d


def pair_populations(g1: np.ndarray, g2: np.ndarray, P2: float) -> np.ndarray:
    """Two-photon populations from the product-form factors in a mode basis.

    Args:
        g1: Matrix elements ``<phi_i|herald|phi_j>``.
        g2: Matrix elements ``<phi_i|pair|phi_j>``.
        P2: Two-photon population used for normalization.

    Returns:
        Symmetric matrix ``Q`` with aggregated off-diagonal pairs.
    """
    d1, d2 = np.diag(g1), np.diag(g2)
    Q = (np.outer(d1, d2) + np.outer(d2, d1) + g1 * g2.T + g1.T * g2).real
    np.fill_diagonal(Q, 2.0 * (d1 * d2).real)
    return Q / P2


def hom_factor(P1: float, weights: np.ndarray, Q: np.ndarray, purity: float) -> float:
    """Two-photon response ``F`` from weights and pair populations."""
    w = np.asarray(weights)
    off = Q.sum(axis=1) - np.diag(Q)
    return float(1.0 + 2.0 * P1 * (1.0 - np.sum(w * (2.0 * np.diag(Q) + off)) / (2.0 * purity)))


def hom_factor_modes(P1: float, weights: np.ndarray) -> float:
    """``F`` for independent modes, from the one-photon weights alone."""
    w = np.asarray(weights)
    pur = float(np.sum(w * w))
    return float(1.0 + 2.0 * P1 / (1.0 + pur) * (pur - np.sum(w**3) / pur))


def _eigen(cd: ConditionalDensity):
    sw = np.sqrt(cd.weights)
    rho = cd.rho1
    S = sw[:, None] * rho * sw[None, :]
    S = 0.5 * (S + S.conj().T)
    vals, vecs = np.linalg.eigh(S)
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order], sw


def _leading_basis(cd: ConditionalDensity, sw):
    # x -> 0 limit of the eigenbasis: range of the leading kernel, then the
    # second-order kernel diagonalized on its complement
    def weighted(m):
        s = sw[:, None] * m * sw[None, :]
        return 0.5 * (s + s.conj().T)

    r0 = weighted(cd.orders[0])
    v0, e0 = np.linalg.eigh(r0)
    top = v0 > WEIGHT_CUTOFF * max(v0.max(), 1e-300)
    head = e0[:, top][:, np.argsort(-v0[top])]
    comp = e0[:, ~top]
    r2 = weighted(cd.orders[2])
    v2, e2 = np.linalg.eigh(comp.conj().T @ r2 @ comp)
    tail = comp @ e2[:, np.argsort(-v2)]
    return np.hstack([head, tail])


def _leading_p1(cd: ConditionalDensity) -> float:
    if cd.orders is None or 0 not in cd.orders:
        return cd.P1
    return float(np.sum(cd.weights * np.diag(cd.orders[0]).real))


def characterize(cd, eta: float = 1.0, basis: str = "full") -> Characterization:
    """Characterize a heralded state.

    Args:
        cd: Time-domain ``ConditionalDensity`` or ``ModeSpaceDensity``.
        eta: Signal-arm efficiency; rescales ``P1 -> eta P1`` and
            ``P2 -> eta**2 P2``. ``Upsilon`` uses unscaled populations.
        basis: ``"full"`` uses the eigenmodes of the truncated one-photon
            state. ``"leading"`` uses their weak-drive limit, which is what
            leading-order pair populations refer to.

    Returns:
        The characterization. For click-averaged pulsed states ``shortcut``
        holds the independent-mode expressions for comparison.

    Raises:
        PositivityError: If the one-photon state has a negative eigenvalue
            beyond ``-1e-8`` of its trace.
    """
    if isinstance(cd, ModeSpaceDensity):
        return _characterize_modes(cd, eta)
    vals, vecs, sw = _eigen(cd)
    if vals[-1] < -1e-8 * vals.sum():
        raise PositivityError(f"negative eigenvalue {vals[-1]:.3e}")
    keep = vals > WEIGHT_CUTOFF
    weights = vals[keep]
    purity = float(np.sum(weights**2))
    if basis == "leading" and cd.orders is not None:
        U = _leading_basis(cd, sw)
        rho_w = sw[:, None] * cd.rho1 * sw[None, :]
        diag = np.real(np.einsum("ki,kl,li->i", U.conj(), rho_w, U))
        keep_b = diag > WEIGHT_CUTOFF
        U, mode_weights = U[:, keep_b], diag[keep_b]
    else:
        U, mode_weights = vecs[:, keep], weights

    def project(m):
        return U.conj().T @ (sw[:, None] * m * sw[None, :]) @ U

    Q = pair_populations(project(cd.herald), project(cd.pair), cd.P2)
    F = hom_factor(cd.P1, mode_weights, Q, purity)
    g2 = 2.0 * cd.P2 / cd.P1**2
    flags = tuple(cd.flags)
    if g2 > G2_FLAG:
        flags += ("g2 above linear-response regime",)
    shortcut = None
    upsilon = cd.P2 / (_leading_p1(cd) ** 2 * cd.extras.get("P_S_leading", cd.P_S))
    if cd.conditioning == "averaged":
        shortcut = {
            "P2": cd.P_S * (1.0 + purity),
            "upsilon": 1.0 + purity,
            "Q": 2.0 * np.outer(weights, weights) / (1.0 + purity),
            "F": hom_factor_modes(cd.P1, weights),
        }
    modes = (U / sw[:, None]).T
    return Characterization(
        P_S=cd.P_S,
        P0=1.0 - eta * cd.P1 - eta**2 * cd.P2,
        P1=eta * cd.P1,
        P2=eta**2 * cd.P2,
        upsilon=upsilon,
        weights=mode_weights,
        purity=purity,
        Q=Q,
        V0=purity,
        F=F,
        g2_pulse=2.0 * eta**2 * cd.P2 / (eta * cd.P1) ** 2,
        eta=eta,
        upsilon_raw=cd.P2 / (cd.P1**2 * cd.P_S),
        shortcut=shortcut,
        flags=flags,
        modes=modes,
    )


def _characterize_modes(md: ModeSpaceDensity, eta: float) -> Characterization:
    w = md.weights
    keep = w > WEIGHT_CUTOFF
    w = w[keep]
    purity = float(np.sum(w * w))
    Q = 2.0 * np.outer(w, w) / (1.0 + purity)
    return Characterization(
        P_S=md.P_S,
        P0=1.0 - eta * md.P1 - eta**2 * md.P2,
        P1=eta * md.P1,
        P2=eta**2 * md.P2,
        upsilon=md.P2 / md.P_S,
        weights=w,
        purity=purity,
        Q=Q,
        V0=purity,
        F=hom_factor(md.P1, w, Q, purity),
        g2_pulse=2.0 * md.P2 / md.P1**2,
        eta=eta,
        upsilon_raw=md.P2 / (md.P1**2 * md.P_S),
        shortcut={"F": hom_factor_modes(md.P1, w), "upsilon": 1.0 + purity},
    )


def short_pulse_closed_form(x: float) -> Characterization:
    """Leading-order characterization of the impulsive pump (a single mode)."""
    x2 = x * x
    P1, P2 = 1.0 - 2.0 * x2, 2.0 * x2
    return Characterization(
        P_S=x2,
        P0=1.0 - P1 - P2,
        P1=P1,
        P2=P2,
        upsilon=P2 / x2 if x2 > 0 else 2.0,
        weights=np.array([1.0]),
        purity=1.0,
        Q=np.array([[1.0]]),
        V0=1.0,
        F=1.0,
        g2_pulse=2.0 * P2 / P1**2,
    )


@dataclass(frozen=True)
class CWClosedForms:
    """Closed-form CW window results.

    Only the dominant mode is available in closed form; the remaining weights
    and pair populations require the numerical route.
    """

    x: float
    T: float
    P1: float
    P2: float
    beta: float
    purity: float
    Q11: float
    P_S_rate: float
    flags: tuple = ()

    def mode(self, t):
        """Dominant eigenmode, normalized on ``[-T/2, T/2]``."""
        t = np.asarray(t, dtype=float)
        norm = np.sqrt(1.0 / (2.0 * (1.0 - np.exp(-self.T / 2))))
        return np.where(np.abs(t) <= self.T / 2, norm * np.exp(-0.5 * np.abs(t)), 0.0)


def cw_beta(T):
    """Purity-loss coefficient ``beta`` in ``purity = 1 - beta x**2``.

    Below ``T = 0.05`` the cancelling bracket is replaced by its series.
    """
    T = np.asarray(T, dtype=float)
    e = np.exp(-T / 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        full = 4.0 * e * (T - 5.0 + e * (7.0 + T + T * T / 8) - e * e * (2.0 + T / 2)) / (1.0 - e) ** 2
    return np.where(T < 0.05, _beta_series(T), full)[()]


def _beta_series(T):
    # expansion of the closed form about T = 0
    return T * T * (5.0 / 24.0 - 23.0 * T / 240.0 + 41.0 * T**2 / 1920.0 - 251.0 * T**3 / 80640.0)


def cw_q11(T):
    """Population of two photons in the dominant CW mode.

    Below ``T = 0.05`` the 0/0 ratio is replaced by its series.
    """
    T = np.asarray(T, dtype=float)
    e = np.exp(-T / 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        num = 2.0 * (40.0 - e * (T * T + 16.0 * T + 56.0) + 4.0 * e * e * (T + 4.0))
        den = 8.0 * (T + 5.0) - e * (T * T + 24.0 * T + 56.0) + 4.0 * e * e * (T + 4.0)
        full = num / den
    return np.where(T < 0.05, _q11_series(T), full)[()]


def _q11_series(T):
    return 1.0 - 5.0 * T**2 / 384.0 + 7.0 * T**3 / 2560.0 - 9.0 * T**4 / 16384.0 + 235.0 * T**5 / 2064384.0


def cw_closed_forms(x: float, kappa_T: float) -> CWClosedForms:
    """Closed-form CW window characterization.

    Args:
        x: Pump strength.
        kappa_T: Acceptance window length.

    Returns:
        Populations, purity, ``beta`` and ``Q11``.
    """
    T = float(kappa_T)
    P1, P2 = cw_populations(x, T)
    beta = float(cw_beta(T))
    flags = ("outside weak-drive regime",) if 2.0 * T * x * x > 0.1 else ()
    return CWClosedForms(
        x=x, T=T, P1=P1, P2=P2, beta=beta, purity=1.0 - beta * x * x,
        Q11=float(cw_q11(T)), P_S_rate=2.0 * x * x, flags=flags,
    )


def hom_visibility(ch: Characterization) -> float:
    """``V = V0 (1 - F g2)``.

    Raises:
        RegimeError: If ``g2 >= 1``.
    """
    if not ch.g2_pulse < 1.0:
        raise RegimeError("g2_pulse must be < 1 for the linear expansion")
    return float(ch.V0 * (1.0 - ch.F * ch.g2_pulse))
