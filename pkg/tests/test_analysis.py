import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cyclewalk import CycleSpec, DistributionSpec, InvalidInputError, WalkState, make_state
from cyclewalk import analysis
from cyclewalk.errors import NotLocalizedError, SearchHorizonError
from cyclewalk.spectral import evolve_cycle, probability_profile


def gaussian(n, sigma0, center=0):
    return make_state(DistributionSpec("gaussian", sigma0, center, n))


def test_local_maxima_interior_only():
    v = np.array([3.0, 1.0, 2.0, 1.0, 1.0, 5.0, 4.0, 9.0])
    assert list(analysis.local_maxima(v)) == [2, 5]


@given(st.floats(-5, 5), st.floats(0.1, 3), st.floats(-2, 2))
def test_parabolic_vertex_is_exact_on_parabolas(x0, a, c):
    f = lambda x: c - a * (x - x0) ** 2  # noqa: E731
    ts = (x0 - 0.7, x0 + 0.1, x0 + 1.3)
    assert analysis.parabolic_vertex(*ts, *(f(t) for t in ts)) == pytest.approx(x0, abs=1e-9)


def test_refine_peak_on_cosine():
    t, v = analysis.refine_peak(np.cos, -0.3, 0.05, 0.4)
    assert abs(t) < 1e-7 and v == pytest.approx(1.0, abs=1e-12)


def test_c4_transfer_time():
    tt = analysis.find_transfer_time(CycleSpec(4), WalkState.vertex(4))
    assert tt.tau == pytest.approx(math.pi / 2, abs=1e-6)
    assert tt.value == pytest.approx(1.0, abs=1e-10)
    assert tt.shift == 2


def test_transfer_time_near_quarter_n_for_vertex_states():
    for n in (20, 51, 100):
        tt = analysis.find_transfer_time(CycleSpec(n), WalkState.vertex(n))
        assert 0.2 * n < tt.tau < 0.33 * n


def test_transfer_time_is_a_local_maximum():
    spec, psi = CycleSpec(200), gaussian(200, 10.0)
    tt = analysis.find_transfer_time(spec, psi)
    around = analysis.fidelity(spec, psi, tt.tau + np.array([-1e-3, 0.0, 1e-3]))
    assert around[1] >= around[0] and around[1] >= around[2]
    assert tt.value >= 0.99


def test_transfer_time_scales_with_hopping_rate():
    psi = gaussian(100, 5.0)
    slow = analysis.find_transfer_time(CycleSpec(100, 1.0), psi)
    fast = analysis.find_transfer_time(CycleSpec(100, 2.0), psi)
    assert fast.tau == pytest.approx(slow.tau / 2, rel=1e-6)
    assert fast.value == pytest.approx(slow.value, abs=1e-9)


def test_transfer_time_horizon_error():
    with pytest.raises(SearchHorizonError):
        analysis.find_transfer_time(CycleSpec(200), gaussian(200, 10.0), horizon=50.0)


def test_fidelity_with_zero_shift_is_autocorrelation():
    spec, psi = CycleSpec(30), gaussian(30, 2.0)
    assert analysis.fidelity(spec, psi, 0.0, shift=0) == pytest.approx(1.0)
    # at t=0 this is just the overlap of the packet with its antipodal copy
    static = abs(np.vdot(np.roll(psi.amplitudes, 15), psi.amplitudes)) ** 2
    assert analysis.fidelity(spec, psi, 0.0) == pytest.approx(static, rel=1e-9)
    assert static < 1e-5


def test_antipodal_probability_matches_profile():
    spec, psi = CycleSpec(9), WalkState.vertex(9)
    p = probability_profile(evolve_cycle(spec, psi, 2.2))
    assert analysis.antipodal_probability(spec, psi, 2.2) == pytest.approx(p[4], abs=1e-14)


def test_fidelity_trace_validation():
    spec, psi = CycleSpec(8), WalkState.vertex(8)
    tr = analysis.fidelity_trace(spec, psi, [0.0, 1.0, 2.0])
    assert tr.values.shape == (3,)
    with pytest.raises(InvalidInputError):
        analysis.fidelity_trace(spec, psi, [0.0, 2.0, 1.0])


def test_c4_revivals_are_perfect():
    spec = CycleSpec(4)
    peaks = analysis.track_peaks(spec, WalkState.vertex(4), math.pi / 2, 12)
    assert [p.index for p in peaks] == list(range(2, 13))
    for p in peaks:
        assert p.present and p.peak_value == pytest.approx(1.0, abs=1e-10)
        assert p.peak_time == pytest.approx(p.index * math.pi / 2, abs=1e-6)
        assert p.shift == (0 if p.index % 2 == 0 else 2)


def test_track_peaks_fixed_windows_agree_early():
    spec, psi = CycleSpec(100), gaussian(100, 10.0)
    tau = analysis.find_transfer_time(spec, psi).tau
    follow = analysis.track_peaks(spec, psi, tau, 6)
    fixed = analysis.track_peaks(spec, psi, tau, 6, follow=False)
    for a, b in zip(follow, fixed):
        assert a.peak_value == pytest.approx(b.peak_value, abs=1e-9)


def test_track_peaks_input_checks():
    spec, psi = CycleSpec(10), WalkState.vertex(10)
    with pytest.raises(InvalidInputError):
        analysis.track_peaks(spec, psi, 2.0, 1)
    with pytest.raises(InvalidInputError):
        analysis.track_peaks(spec, psi, 0.0, 4)


def test_power_law_fit_recovers_exponent():
    pts = [(n, 3.0 * n ** -0.7) for n in range(4, 60)]
    fit = analysis.fit_power_law(pts)
    assert fit.exponent == pytest.approx(0.7) and fit.prefactor == pytest.approx(3.0)
    assert fit.r_squared == pytest.approx(1.0)
    even = analysis.fit_power_law(pts, "even")
    assert even.count == 28 and even.n_range == (4.0, 58.0)


def test_power_law_fit_errors():
    with pytest.raises(InvalidInputError):
        analysis.fit_power_law([(n, 1.0 / n) for n in range(4, 8)])
    with pytest.raises(InvalidInputError):
        analysis.fit_power_law([(n, 1.0) for n in range(10)])
    with pytest.raises(InvalidInputError):
        analysis.fit_power_law([(n, 1.0 / n) for n in range(1, 20)], "prime")


def test_quadratic_prefactor():
    assert analysis.fit_quadratic_prefactor([(n, 0.08 * n * n) for n in (10, 20, 30)]) == pytest.approx(0.08)


def test_vertex_state_spreads_ballistically():
    spec = CycleSpec(400)
    samples = analysis.dispersion_growth(spec, WalkState.vertex(400), np.linspace(5, 40, 8))
    assert analysis.spreading_rate(samples) == pytest.approx(math.sqrt(2), abs=0.03)
    # on a line sigma(t) = sqrt(2) t exactly until the fronts reach the wrap
    for t, s in samples:
        assert s == pytest.approx(math.sqrt(2) * t, rel=1e-6)


def test_dispersion_refuses_wrapped_times():
    with pytest.raises(NotLocalizedError):
        analysis.dispersion_growth(CycleSpec(40), WalkState.vertex(40), [1.0, 6.0])


def test_half_period_profile_check():
    spec, psi = CycleSpec(200), gaussian(200, 10.0)
    tau = analysis.find_transfer_time(spec, psi).tau
    assert analysis.half_period_profile_check(spec, psi, tau) < 0.05
    with pytest.raises(InvalidInputError):
        analysis.half_period_profile_check(CycleSpec(60), gaussian(60, 5.0), 100.0)
    with pytest.raises(InvalidInputError):
        analysis.half_period_profile_check(CycleSpec(200), gaussian(200, 2.0), 100.0)


def test_wider_packets_transfer_better():
    spec = CycleSpec(200)
    values = [analysis.find_transfer_time(spec, gaussian(200, s)).value for s in (1.0, 5.0, 10.0)]
    assert values[0] < values[1] < values[2]
    assert values[0] == pytest.approx(0.30, abs=0.05)
