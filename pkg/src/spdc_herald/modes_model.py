"""Independent time-bin models for a continuously driven source.

A CW heralded source is approximated by ``N`` independent single-mode
sources, each covering a bin of length ``T1``. The three variants differ only
in how ``T1`` is chosen. Quantities are per unit time or per bin so the total
observation time never appears.
"""

from __future__ import annotations

from dataclasses import dataclass

from spdc_herald.metrics import cw_closed_forms

VARIANTS = ("fixed", "matched", "window")

#: Leading-order drive used to evaluate ``P2 / x**2`` and ``P1``.
_WEAK_X = 1e-4


@dataclass(frozen=True)
class BinModel:
    """One independent time-bin model.

    Attributes:
        variant: ``"fixed"`` (``T1 = 2``), ``"matched"`` (``T1`` chosen so that
            ``upsilon * N = 2``) or ``"window"`` (``T1 = T``).
        x: Pump strength.
        T: Acceptance window length.
    """

    variant: str
    x: float
    T: float

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if not self.T > 0:
            raise ValueError("T must be positive")


@dataclass(frozen=True)
class ModelReport:
    """Per-model comparison parameters.

    Attributes:
        T1: Bin length.
        modes_per_time: ``N / total time = 1 / T1``.
        upsilon_N: Counting ratio referred to a single bin.
        beta_tilde: Purity loss per bin success probability,
            ``1 - purity = beta_tilde * P_S1``.
    """

    T1: float
    modes_per_time: float
    upsilon_N: float
    beta_tilde: float

    def purity_at(self, p_s1: float) -> float:
        """Single-photon purity at bin success probability ``p_s1``."""
        return 1.0 - self.beta_tilde * p_s1


def _window_stats(T: float):
    cf = cw_closed_forms(_WEAK_X, T)
    return cf.P1, cf.P2 / _WEAK_X**2, cf.beta


def bin_length(m: BinModel) -> float:
    """Bin length ``T1`` for a model."""
    if m.variant == "fixed":
        return 2.0
    if m.variant == "window":
        return float(m.T)
    P1, p2x, _ = _window_stats(m.T)
    return p2x / (4.0 * P1 * P1)


def model_report(m: BinModel) -> ModelReport:
    """Evaluate the comparison parameters of a bin model.

    Args:
        m: The model.

    Returns:
        Bin length, modes per unit time, ``upsilon * N`` and ``beta_tilde``.
    """
    P1, p2x, beta = _window_stats(m.T)
    T1 = bin_length(m)
    return ModelReport(
        T1=T1,
        modes_per_time=1.0 / T1,
        upsilon_N=p2x / (P1 * P1) / (2.0 * T1),
        beta_tilde=beta / (2.0 * T1),
    )


def bin_success_probability(m: BinModel) -> float:
    """Heralding probability in one bin, ``2 x**2 T1``."""
    return 2.0 * m.x * m.x * bin_length(m)
