"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import time
import warnings

import numpy as np
import pytest

from conftest import fitted_exponent, record_criterion
from spdc_herald.bogoliubov import TimeGrid, bloch_messiah, build_kernels, check_commutation_identities
from spdc_herald.correlators import (
    CWCorrelators,
    DeltaCorrelators,
    GaussianCorrelators,
    GridCorrelators,
    success_probability,
)
from spdc_herald.heralded import rho_conditional_at_click, rho_time_averaged
from spdc_herald.metrics import characterize, cw_beta, cw_closed_forms, cw_q11, short_pulse_closed_form
from spdc_herald.modes_model import VARIANTS, BinModel, model_report
from spdc_herald.oracle import (
    SyntheticState,
    density_from_correlations,
    exact_moments,
    forward_correlation,
    oracle_density,
)
from spdc_herald.pump import CW, Delta, Gaussian


def test_short_pulse_analytics():
    worst_closed = worst_grid = slowest = 0.0
    for x in (0.02, 0.05, 0.1):
        x2 = x * x
        ref = (x2, 1 - 2 * x2, 2 * x2, 1.0, 2.0, 1.0, 1.0)
        cf = short_pulse_closed_form(x)
        got = (cf.P_S, cf.P1, cf.P2, cf.purity, cf.upsilon, cf.V0, cf.F)
        worst_closed = max(worst_closed, max(abs(a - b) for a, b in zip(got, ref)))
        t0 = time.perf_counter()
        ch = characterize(rho_time_averaged(DeltaCorrelators(x)))
        slowest = max(slowest, time.perf_counter() - t0)
        got = (ch.P_S, ch.P1, ch.P2, ch.purity, ch.upsilon, ch.V0, ch.F)
        worst_grid = max(worst_grid, max(abs(a - b) for a, b in zip(got, ref)))
    ok = worst_closed < 1e-10 and worst_grid < 1e-4 and slowest < 1.0
    record_criterion(1, ok, f"short pulse: closed-form dev {worst_closed:.1e}, numerical dev {worst_grid:.1e}, "
                            f"slowest point {slowest:.2f} s")
    assert ok


def test_commutation_identities():
    cases = {
        "delta": (Delta(0.1), (-2.0, 20.0), (111, 221, 441)),
        "gaussian": (Gaussian(0.3, 1.0), (-8.0, 16.0), (121, 241, 481)),
        "cw": (CW(0.1), (-20.0, 20.0), (201, 401, 801)),
    }
    worst, min_ratio = 0.0, np.inf
    for prof, (lo, hi), ns in cases.values():
        kernels = [build_kernels(prof, TimeGrid(lo, hi, n)) for n in ns]
        worst = max(worst, max(check_commutation_identities(k).worst for k in kernels))
        trap = [check_commutation_identities(k, rule="trapezoid").worst for k in kernels]
        min_ratio = min(min_ratio, min(a / b for a, b in zip(trap, trap[1:])))
    ok = worst < 1e-6 and min_ratio >= 3.0
    record_criterion(2, ok, f"identities: max residual {worst:.1e}, trapezoid halving ratio >= {min_ratio:.2f}")
    assert ok


def test_bloch_messiah():
    t0 = time.perf_counter()
    k = build_kernels(Gaussian(0.1, 1.0), TimeGrid(-8.0, 30.0, 400))
    dec = bloch_messiah(k)
    elapsed = time.perf_counter() - t0
    gram_err = 0.0
    for modes in (dec.out_modes_a, dec.in_modes_a, dec.in_modes_b):
        m = modes[:10]
        gram_err = max(gram_err, np.abs(dec.weight * m.conj() @ m.T - np.eye(len(m))).max())
    pairing = np.abs(dec.lambdas**2 - dec.mus**2 - 1.0).max()
    ps = success_probability(GaussianCorrelators(0.1, 1.0), order=4).value
    ps_err = abs(dec.pair_probabilities.sum() - ps)
    ok = gram_err < 1e-8 and pairing < 1e-6 and dec.reconstruction_error < 1e-6 and ps_err < 1e-4 and elapsed < 30
    record_criterion(3, ok, f"Bloch-Messiah: orthonormality {gram_err:.1e}, lambda^2-mu^2-1 {pairing:.1e}, "
                            f"reconstruction {dec.reconstruction_error:.1e}, sum sinh^2 vs P_S {ps_err:.1e}, "
                            f"{elapsed:.1f} s")
    assert ok


def test_gaussian_narrow_limit():
    x = 0.05
    cd = rho_time_averaged(GaussianCorrelators(x, 0.01))
    ch = characterize(cd)
    ps = ch.P_S
    # short-pulse values expressed through the success probability
    ref = {"purity": 1.0, "upsilon": 2.0, "F": 1.0, "P1": 1 - 2 * ps, "P2": 2 * ps}
    got = {"purity": ch.purity, "upsilon": ch.upsilon, "F": ch.F, "P1": ch.P1, "P2": ch.P2}
    dev = {k: abs(got[k] / ref[k] - 1.0) for k in ref}
    area_deficit = 1.0 - cd.extras["P_S_leading"] / (x * x)
    ok = max(dev.values()) < 0.01
    record_criterion(4, ok, "narrow Gaussian: max relative dev " + f"{max(dev.values()):.1e} at equal P_S "
                            f"(leading P_S is {area_deficit:.2%} below x^2 at equal pump area)")
    assert ok


def test_gaussian_multimode_point():
    sigmas = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0)
    F = [characterize(rho_time_averaged(GaussianCorrelators(0.01, s))).F for s in sigmas]
    i_min = int(np.argmin(F))
    F4 = F[sigmas.index(4.0)]
    interior = 0 < i_min < len(sigmas) - 1 and 2.0 <= sigmas[i_min] <= 6.0
    ok = abs(F4 - 0.81) <= 0.02 and interior
    record_criterion(5, ok, f"Gaussian sigma=4: F = {F4:.4f}; minimum F = {F[i_min]:.4f} at sigma = {sigmas[i_min]:g}")
    assert ok


def test_pulsed_identities():
    worst = 0.0
    for sigma in (0.1, 1.0, 4.0):
        ch = characterize(rho_time_averaged(GaussianCorrelators(1e-4, sigma)))
        sc = ch.shortcut
        iu = np.triu_indices(ch.Q.shape[0])
        worst = max(worst, abs(ch.P2 - sc["P2"]), abs(ch.upsilon - sc["upsilon"]),
                    np.abs(ch.Q[iu] - sc["Q"][iu]).max(), abs(ch.F - sc["F"]))
    ok = worst < 1e-6
    record_criterion(6, ok, f"pulsed shortcut identities at x=1e-4: max dev {worst:.1e}")
    assert ok


def test_cw_closed_forms():
    x, worst = 0.01, 0.0
    for T in (0.5, 1.0, 2.0, 4.0, 8.0):
        cf = cw_closed_forms(x, T)
        num = characterize(rho_conditional_at_click(CWCorrelators(x), 0.0, window=(-T / 2, T / 2)), basis="leading")
        worst = max(worst, abs(num.P1 - cf.P1), abs(num.P2 - cf.P2), abs(num.purity - cf.purity),
                    abs(num.Q[0, 0] - cf.Q11))
    p1_lim = max(abs(cw_closed_forms(1e-9, T).P1 - (1 - np.exp(-T / 2))) for T in (0.5, 1.0, 2.0, 4.0, 8.0))
    q11_lim = abs(cw_q11(1e-6) - 1.0)
    Ts = np.logspace(-3, 2.3, 300)
    beta = cw_beta(Ts)
    beta_ok = bool(np.all(beta >= 0)) and beta[0] < 1e-6 and beta[-1] < 1e-30
    ok = worst < 1e-6 and p1_lim < 1e-8 and q11_lim < 1e-10 and beta_ok
    record_criterion(7, ok, f"CW closed forms vs numerical: max dev {worst:.1e}; weak-limit P1 dev {p1_lim:.1e}; "
                            f"Q11(T->0) - 1 = {q11_lim:.1e}; beta >= 0 and vanishing at both ends: {beta_ok}")
    assert ok


def _model_checks():
    narrow = {v: model_report(BinModel(v, 0.01, 1e-3)) for v in VARIANTS}
    Ts = np.logspace(-2, 1.3, 40)
    fixed_ok = model_report(BinModel("fixed", 0.01, 1.0)).T1 == 2.0 and abs(narrow["fixed"].upsilon_N - 2) < 1e-3
    matched_ok = all(abs(model_report(BinModel("matched", 0.01, T)).upsilon_N - 2) < 1e-12 for T in Ts)
    window_ok = all(abs(model_report(BinModel("window", 0.01, T)).modes_per_time - 1 / T) < 1e-12 for T in Ts)
    purity = min(model_report(BinModel(v, 0.01, T)).purity_at(0.15) for v in VARIANTS for T in Ts)
    return narrow, fixed_ok, matched_ok, window_ok, purity


def test_bin_models():
    narrow, fixed_ok, matched_ok, window_ok, purity = _model_checks()
    coincide = all(abs(r.modes_per_time - 0.5) < 1e-3 and abs(r.upsilon_N - 2) < 1e-3 for r in narrow.values())
    record_criterion(8, fixed_ok and matched_ok and window_ok and purity >= 0.98 and coincide,
                     f"bin models: (i) {fixed_ok}, (ii) {matched_ok}, (iii) {window_ok}, min purity {purity:.4f}; "
                     f"all coincide at T->0: {coincide} (window model N/T = {narrow['window'].modes_per_time:g} "
                     f"at T = 1e-3, fixed and matched give "
                     f"{narrow['fixed'].modes_per_time:.4f} and {narrow['matched'].modes_per_time:.4f})")
    assert fixed_ok and matched_ok and window_ok and purity >= 0.98


@pytest.mark.xfail(strict=True, reason="window bins give N/T = 1/T, which diverges as T -> 0")
def test_bin_models_coincide_for_narrow_windows():
    narrow = _model_checks()[0]
    assert all(abs(r.modes_per_time - 0.5) < 1e-3 and abs(r.upsilon_N - 2) < 1e-3 for r in narrow.values())


def _oracle_pair(scenario, x):
    if scenario == "delta":
        k = build_kernels(Delta(x), TimeGrid(-2.0, 20.0, 221))
        od = oracle_density(exact_moments(k))
        cd = rho_time_averaged(GridCorrelators(k))
    elif scenario == "gaussian":
        k = build_kernels(Gaussian(x, 1.0), TimeGrid(-8.0, 24.0, 321))
        od = oracle_density(exact_moments(k))
        cd = rho_time_averaged(GridCorrelators(k))
    else:
        k = build_kernels(CW(x), TimeGrid(-20.0, 4.0, 241))
        od = oracle_density(exact_moments(k).window(-1.0, 1.0), t_c=0.0)
        cd = rho_conditional_at_click(GridCorrelators(k), 0.0, window=(-1.0, 1.0))
    ch = characterize(cd)
    return od.P1 - cd.P1, od.P2 - cd.P2, od.purity - ch.purity


def test_oracle_power_law():
    xs = (0.01, 0.02, 0.05)
    parts, ok = [], True
    for scenario in ("delta", "gaussian", "cw"):
        errs = np.array([_oracle_pair(scenario, x) for x in xs])
        for name, col in zip(("P1", "P2", "purity"), errs.T):
            if np.abs(col).max() < 1e-13:
                parts.append(f"{scenario} {name} exact")
                continue
            p = fitted_exponent(xs, col)
            ok &= abs(p - 4.0) <= 0.3
            parts.append(f"{scenario} {name} {p:.2f}")
    record_criterion(9, ok, "oracle residual exponents (expected 4): " + ", ".join(parts))
    assert ok


def test_inversion_round_trip():
    rng = np.random.default_rng(7)
    worst_inv = worst_fwd = 0.0
    for modes in (1, 2, 3):
        xis = rng.uniform(0.05, 0.5, modes)
        h = rng.uniform(0.2, 1.0, modes)
        state = SyntheticState(xis, h / np.linalg.norm(h), max_photons=2)
        w = state.weights
        for n in (0, 1, 2):
            for _ in range(6):
                times = tuple(int(i) for i in rng.integers(0, modes, 2 * n))
                with warnings.catch_warnings():
                    # strongly squeezed draws grow term by term; the sum is still exact
                    warnings.simplefilter("ignore", RuntimeWarning)
                    inv = density_from_correlations(state.correlation, n, times, k_max=2, weights=w).value
                worst_inv = max(worst_inv, abs(inv - state.density(times[:n], times[n:])))
                fwd = forward_correlation(state.density, n, times, k_max=2, weights=w)
                worst_fwd = max(worst_fwd, abs(fwd - state.correlation(times[:n], times[n:])))
    ok = worst_inv < 1e-8 and worst_fwd < 1e-8
    record_criterion(10, ok, f"inversion round trip on 1-3 mode states: inversion {worst_inv:.1e}, "
                             f"forward {worst_fwd:.1e}")
    assert ok

