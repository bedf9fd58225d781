"""Multimode characterization of heralded single photons from a pumped cavity."""

from spdc_herald.bogoliubov import (
    KernelGrid,
    ModeDecomposition,
    TimeGrid,
    bloch_messiah,
    build_kernels,
    check_commutation_identities,
    tmss_amplitudes,
)
from spdc_herald.correlators import (
    CWCorrelators,
    DeltaCorrelators,
    GaussianCorrelators,
    GridCorrelators,
    make_correlators,
    success_probability,
)
from spdc_herald.heralded import (
    ConditionalDensity,
    rho_conditional_at_click,
    rho_time_averaged,
    rho_windowed_cw,
)
from spdc_herald.metrics import Characterization, characterize, cw_closed_forms, hom_visibility
from spdc_herald.modes_model import BinModel, model_report
from spdc_herald.oracle import (
    MomentSet,
    conditional_correlation,
    density_from_correlations,
    exact_moments,
    oracle_density,
)
from spdc_herald.pump import CW, Delta, Gaussian, chi_at, integrated_chi

__version__ = "0.1.0"

__all__ = [
    "CW",
    "BinModel",
    "CWCorrelators",
    "Characterization",
    "ConditionalDensity",
    "Delta",
    "DeltaCorrelators",
    "Gaussian",
    "GaussianCorrelators",
    "GridCorrelators",
    "KernelGrid",
    "ModeDecomposition",
    "MomentSet",
    "TimeGrid",
    "bloch_messiah",
    "build_kernels",
    "characterize",
    "check_commutation_identities",
    "chi_at",
    "conditional_correlation",
    "cw_closed_forms",
    "density_from_correlations",
    "exact_moments",
    "hom_visibility",
    "integrated_chi",
    "make_correlators",
    "model_report",
    "oracle_density",
    "rho_conditional_at_click",
    "rho_time_averaged",
    "rho_windowed_cw",
    "success_probability",
    "tmss_amplitudes",
]
