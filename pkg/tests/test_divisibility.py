import numpy as np
import pytest

from helpers import random_density
from nmflow import channels, divisibility
from nmflow.channels import AffineQubitMap, AmpDampChannel, ConstantRate, GadcChannel, dephasing, \
    depolarizing, quasi_eternal
from nmflow.correlations import mutual_information
from nmflow.divisibility import (
    DivisibilityLabel,
    classify_intervals,
    cptp_conditions,
    divisibility_rates,
    is_cp,
    is_p_qubit,
    physicality_threshold,
    rhp_g,
)



def test_is_cp_identity():
    ok, min_eig = is_cp(channels.IDENTITY_MAP, 2)
    assert ok
    assert min_eig == pytest.approx(0.0, abs=1e-12)


def test_is_cp_quasi_eternal_intermediate_past_t0():
    ch = quasi_eternal(0.4, 2.0)
    ok, min_eig = is_cp(ch.intermediate(3.0, 3.1), 2)
    assert not ok
    assert min_eig < -1e-6
    # Before t0 all rates are nonnegative and the intermediate map is CP.
    ok_early, _ = is_cp(ch.intermediate(0.5, 1.0), 2)
    assert ok_early


def test_is_cp_dephasing_negative_rate():
    ch = dephasing(ConstantRate(-0.5))
    ok, _ = is_cp(ch.intermediate(0.0, 0.3), 2)
    assert not ok


def test_is_p_identity_and_expanding():
    assert is_p_qubit(AffineQubitMap((1.0, 1.0, 1.0)))
    # Dephasing backwards in time expands sigma_x: witnessed by (1 + sigma_x)/2.
    q = np.exp(0.4)
    assert not is_p_qubit(AffineQubitMap((q, q, 1.0)))


def test_is_p_quasi_eternal_intermediates():
    ch = quasi_eternal(0.4, 2.0)
    for (t, s) in ((2.5, 3.0), (3.0, 4.5), (6.0, 6.5)):
        v = ch.intermediate(t, s)
        assert is_p_qubit(v)
        ok, _ = is_cp(v, 2)
        assert not ok


def test_is_p_affine_map():
    # Amplitude damping maps are positive; pushing the translation out is not.
    assert is_p_qubit(channels.amp_damp_map(0.6, 0.9))
    bad = AffineQubitMap((0.6, 0.6, 0.36), (0.0, 0.0, 0.8))
    assert not is_p_qubit(bad)


def test_is_p_affine_against_dense_sampling():
    # Oracle: for an affine qubit map, positivity is max_n ||diag(l) n + w|| <= 1
    # over unit Bloch vectors; compare the grid + refinement verdict against a
    # dense random sample of directions.
    rng = np.random.default_rng(23)
    n_dirs = rng.normal(size=(200_000, 3))
    n_dirs /= np.linalg.norm(n_dirs, axis=1, keepdims=True)
    for _ in range(50):
        lam = rng.uniform(-1.0, 1.0, size=3)
        w = rng.uniform(-0.5, 0.5, size=3) * rng.uniform(0.0, 1.0)
        qmap = AffineQubitMap(tuple(lam), tuple(w))
        worst = float(np.max(np.linalg.norm(n_dirs * lam + w, axis=1)))
        if abs(worst - 1.0) < 1e-4:
            continue  # too close to the boundary for a sampling oracle
        assert is_p_qubit(qmap) == (worst <= 1.0)


def test_physicality_threshold_values():
    assert physicality_threshold(0.4) == pytest.approx(0.7686, abs=1e-3)
    assert physicality_threshold(1.0) == pytest.approx(0.0, abs=1e-14)
    assert physicality_threshold(2.0) == pytest.approx(0.5 * np.log(np.sqrt(2.0) - 1.0), rel=1e-12)
    assert physicality_threshold(2.0) == pytest.approx(-0.4407, abs=1e-3)
    # Cross-check: alpha = 2 is physical even at t0 = 0.
    ch = quasi_eternal(2.0, 0.0)
    assert cptp_conditions(ch, 40.0)[0] >= -1e-9
    with pytest.raises(ValueError):
        physicality_threshold(0.0)


def test_cptp_conditions():
    ch = quasi_eternal(0.4, 1.0)
    np.testing.assert_allclose(cptp_conditions(ch, 0.0), (0.0, 0.0, 0.0), atol=1e-12)
    for t in (0.5, 2.0, 8.0):
        b_xyz, b_yzx, b_zxy = cptp_conditions(ch, t)
        expected = 1.0 - np.exp(-0.8 * t)
        assert b_yzx == pytest.approx(expected, rel=1e-10)
        assert b_zxy == pytest.approx(expected, rel=1e-10)
        assert b_xyz >= -1e-9


def test_divisibility_rates():
    assert divisibility_rates(1.0, 1.0, 1.0) == {"cp": True, "p": True}
    ch = quasi_eternal(0.4, 1.0)
    gx, gy, gz = ch.rates(3.0)
    assert gz < 0
    assert divisibility_rates(gx, gy, gz) == {"cp": False, "p": True}
    assert divisibility_rates(1.0, 1.0, -3.0) == {"cp": False, "p": False}


def test_cp_implies_p_random_diagonal_maps():
    rng = np.random.default_rng(20)
    for _ in range(10_000):
        lam = tuple(rng.uniform(-1.2, 1.2, size=3))
        qmap = AffineQubitMap(lam)
        cp, _ = is_cp(qmap, 2, tol=1e-12)
        p = max(abs(l) for l in lam) <= 1.0
        if cp:
            assert p


def test_is_cp_agrees_with_rate_criterion_on_short_intervals():
    rng = np.random.default_rng(21)
    ch = quasi_eternal(0.4, 1.0)
    dt = 1e-4
    for _ in range(200):
        t = float(rng.uniform(0.0, 4.0))
        min_rate = min(ch.rates(t))
        if abs(min_rate) < 1e-3:
            continue  # borderline: first-order criterion not conclusive
        cp, _ = is_cp(ch.intermediate(t, t + dt), 2, tol=1e-12)
        assert cp == (min_rate > 0)


def test_rhp_g_zero_on_cp_region():
    ch = quasi_eternal(0.4, 2.0)
    for t in (0.2, 1.0, 1.8):
        assert abs(rhp_g(ch, t)) < 1e-6
    gadc = GadcChannel()
    assert abs(rhp_g(gadc, 0.05)) < 1e-6


def test_rhp_g_gadc_piecewise():
    gadc = GadcChannel()
    # Inside the first non-CP window g = -gamma_minus; afterwards where
    # gamma_plus < 0, g = -gamma_plus.
    for t in (0.16, 0.2, 0.28):
        gm, _ = gadc.rates(t)
        assert gm < 0
        assert rhp_g(gadc, t) == pytest.approx(-gm, abs=1e-4)
    t_plus = 0.45
    gm, gp = gadc.rates(t_plus)
    assert gp < 0 < gm
    assert rhp_g(gadc, t_plus) == pytest.approx(-gp, abs=1e-4)
    assert rhp_g(gadc, 0.2) >= -1e-8


def test_rhp_g_quasi_eternal_positive_past_t0():
    ch = quasi_eternal(0.4, 1.0)
    g = rhp_g(ch, 2.0)
    # First order in dt the Bell weights of V_{t+dt,t} are gamma_k dt, so
    # g = sum_k (|gamma_k| - gamma_k) = -2 gamma_z here.
    assert g > 0
    assert g == pytest.approx(-2.0 * ch.rates(2.0)[2], rel=1e-2)


def test_classify_intervals_cosine_dephasing():
    intervals = classify_intervals(np.cos, t_max=10.0, step=5e-3)
    labels = [iv.label for iv in intervals]
    assert labels == [DivisibilityLabel.CP_DIVISIBLE, DivisibilityLabel.NOT_P,
                      DivisibilityLabel.CP_DIVISIBLE, DivisibilityLabel.NOT_P]
    bounds = [iv.t_end for iv in intervals[:-1]]
    np.testing.assert_allclose(bounds, [np.pi / 2, 3 * np.pi / 2, 5 * np.pi / 2], atol=1e-5)
    for a, b in zip(intervals[:-1], intervals[1:]):
        assert a.label is not b.label
        assert a.t_end == b.t_start


def test_classify_intervals_constant_rate():
    intervals = classify_intervals(lambda t: 0.7, t_max=4.0, step=0.1)
    assert len(intervals) == 1
    assert intervals[0].label is DivisibilityLabel.CP_DIVISIBLE
    assert (intervals[0].t_start, intervals[0].t_end) == (0.0, 4.0)


def test_classify_intervals_amp_damp_oracle():
    # G(t) = exp(-t/2)(1 + 0.4 sin 4t): gamma = -2 G'/G flips sign where
    # 1 = 3.2 cos(4t) / (1 + 0.4 sin 4t); compare against that closed form.
    def g(t):
        return float(np.exp(-t / 2) * (1 + 0.4 * np.sin(4 * t)))

    def dg(t):
        return float(np.exp(-t / 2) * (-0.5 * (1 + 0.4 * np.sin(4 * t)) + 1.6 * np.cos(4 * t)))

    ch = AmpDampChannel(g, p=0.3, dg_dt=dg)

    def gamma_oracle(t):
        return 1.0 - 3.2 * np.cos(4 * t) / (1 + 0.4 * np.sin(4 * t))

    intervals = classify_intervals(ch.gamma, t_max=3.0, step=5e-3)
    oracle = classify_intervals(gamma_oracle, t_max=3.0, step=5e-3)
    assert [iv.label for iv in intervals] == [iv.label for iv in oracle]
    np.testing.assert_allclose([iv.t_start for iv in intervals],
                               [iv.t_start for iv in oracle], atol=1e-5)


def test_classify_intervals_with_channel_check():
    import warnings
    ch = dephasing(lambda t: float(np.cos(t)))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        intervals = classify_intervals(lambda t: float(np.cos(t)), t_max=4.0, step=0.05,
                                       channel=ch)
    assert [iv.label for iv in intervals] == [DivisibilityLabel.CP_DIVISIBLE,
                                              DivisibilityLabel.NOT_P]


def test_choi_zero_eigenvalue_derivative_sign_law():
    # For dephasing with gamma(t) != 0, the initially-zero Choi eigenvalue of
    # V_{t+delta,t} moves with sign equal to sign(gamma(t)).
    delta = 1e-6
    for gamma_val, t in ((0.8, 0.3), (-0.6, 1.1), (1.5, 2.0), (-0.2, 0.05)):
        ch = dephasing(ConstantRate(gamma_val))
        c = divisibility.choi(ch.intermediate(t, t + delta), 2)
        eigs = np.sort(np.linalg.eigvalsh((c + c.conj().T) / 2))
        # Spectrum at delta = 0 is (0, 0, 0, 2); three eigenvalues start at zero.
        derivs = eigs[:3] / delta
        moving = derivs[np.argmax(np.abs(derivs))]
        assert abs(moving) > 0.1 * abs(gamma_val)
        assert np.sign(moving) == np.sign(gamma_val)


def test_single_parameter_mi_sign_law():
    # Single-parameter evolutions: sign(dI/dt) = -sign(gamma(t)) whenever the
    # derivative is nonzero, for any state.
    rng = np.random.default_rng(22)
    delta = 1e-5
    cases = []
    for gamma_val in (0.9, -0.7):
        cases.append((dephasing(ConstantRate(gamma_val)), gamma_val))
        cases.append((depolarizing(ConstantRate(gamma_val)), gamma_val))
    for ch, gamma_val in cases:
        count = 0
        for _ in range(100):
            rho = random_density(rng, 4)
            t = float(rng.uniform(0.1, 1.0)) if gamma_val > 0 else 0.0
            v_fwd = ch.intermediate(t, t + delta)
            rho_t = channels.apply_map(ch.as_affine(t), rho, (2, 2)) if t > 0 else rho
            i_now = mutual_information(rho_t, (2, 2))
            i_next = mutual_information(channels.apply_map(v_fwd, rho_t, (2, 2)), (2, 2))
            deriv = (i_next - i_now) / delta
            if abs(deriv) > 1e-9:
                count += 1
                assert np.sign(deriv) == -np.sign(gamma_val)
        assert count > 50  # most random states have a nonzero derivative
