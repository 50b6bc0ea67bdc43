import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclewalk import CycleSpec, InvalidInputError, WalkState, amplitude_at, evolve_cycle, probability_profile
from cyclewalk.spectral import SpectralBasis, fidelity_series, fourier_weights, overlap_series, spectral_bandwidth


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return WalkState(v / np.linalg.norm(v))


sizes = st.integers(min_value=3, max_value=48)
seeds = st.integers(min_value=0, max_value=2**32 - 1)
times = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False)


@pytest.mark.parametrize("n,gamma", [(2, 1.0), (0, 1.0), (3.5, 1.0), (5, 0.0), (5, -1.0)])
def test_cycle_spec_rejects_bad_input(n, gamma):
    with pytest.raises(InvalidInputError):
        CycleSpec(n, gamma)


def test_antipodal_vertex():
    assert CycleSpec(8).antipodal(0) == 4
    assert CycleSpec(7).antipodal(0) == 3
    assert CycleSpec(8).antipodal(6) == 2


def test_state_rejects_unnormalised():
    with pytest.raises(InvalidInputError):
        WalkState(np.ones(4))
    with pytest.raises(InvalidInputError):
        WalkState(np.zeros((2, 2)))


def test_state_is_read_only():
    psi = WalkState.vertex(5, 2)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1.0


def test_eigenvalues():
    lam = CycleSpec(6, gamma=0.5).eigenvalues
    assert np.allclose(lam, np.cos(2 * np.pi * np.arange(6) / 6))


@given(sizes, seeds)
def test_fft_matches_dense_fourier_matrix(n, seed):
    basis = SpectralBasis.for_cycle(n)
    x = random_state(n, seed).amplitudes
    assert np.allclose(basis.forward(x), basis.forward(x, "direct"), atol=1e-12)
    assert np.allclose(basis.inverse(x), basis.inverse(x, "direct"), atol=1e-12)
    assert np.allclose(basis.inverse(basis.forward(x)), x, atol=1e-12)


def test_fourier_basis_diagonalises_adjacency():
    n = 9
    adj = np.zeros((n, n))
    for k in range(n):
        adj[k, (k + 1) % n] = adj[(k + 1) % n, k] = 1.0
    basis = SpectralBasis.for_cycle(n)
    f = basis.matrix()
    assert np.allclose(f @ adj @ f.conj().T, np.diag(basis.eigenvalues), atol=1e-12)


def test_unknown_transform_method():
    with pytest.raises(InvalidInputError):
        SpectralBasis.for_cycle(5).forward(np.ones(5), "magic")


@settings(max_examples=60)
@given(sizes, seeds, times)
def test_evolution_is_unitary(n, seed, t):
    psi = evolve_cycle(CycleSpec(n), random_state(n, seed), t)
    assert abs(psi.norm() - 1.0) < 1e-12


@settings(max_examples=60)
@given(sizes, seeds, times, times)
def test_evolution_composes(n, seed, t1, t2):
    spec = CycleSpec(n)
    psi = random_state(n, seed)
    two_step = evolve_cycle(spec, evolve_cycle(spec, psi, t1), t2)
    one_step = evolve_cycle(spec, psi, t1 + t2)
    assert np.allclose(two_step.amplitudes, one_step.amplitudes, atol=1e-9)
    assert two_step.time == pytest.approx(t1 + t2)


@settings(max_examples=60)
@given(sizes, seeds, times)
def test_evolution_is_reversible(n, seed, t):
    spec = CycleSpec(n)
    psi = random_state(n, seed)
    back = evolve_cycle(spec, evolve_cycle(spec, psi, t), -t)
    assert np.allclose(back.amplitudes, psi.amplitudes, atol=1e-10)


@given(sizes, seeds)
def test_zero_time_is_identity(n, seed):
    psi = random_state(n, seed)
    assert np.allclose(evolve_cycle(CycleSpec(n), psi, 0.0).amplitudes, psi.amplitudes, atol=1e-14)


def test_direct_method_agrees_with_fft():
    spec = CycleSpec(11)
    psi = random_state(11, 3)
    a = evolve_cycle(spec, psi, 7.3).amplitudes
    b = evolve_cycle(spec, psi, 7.3, method="direct").amplitudes
    assert np.allclose(a, b, atol=1e-12)


def test_hopping_rate_rescales_time():
    psi = random_state(10, 1)
    slow = evolve_cycle(CycleSpec(10, 1.0), psi, 6.0)
    fast = evolve_cycle(CycleSpec(10, 2.0), psi, 3.0)
    assert np.allclose(slow.amplitudes, fast.amplitudes, atol=1e-12)


def test_large_times_stay_exact():
    # C4 transfers perfectly at odd multiples of pi/2, however late
    spec = CycleSpec(4)
    t = (2 * 100_001 + 1) * math.pi / 2
    p = probability_profile(evolve_cycle(spec, WalkState.vertex(4), t))
    assert p[2] == pytest.approx(1.0, abs=1e-9)


def test_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        evolve_cycle(CycleSpec(5), WalkState.vertex(6), 1.0)


def test_amplitude_at():
    psi = WalkState.vertex(5, 3)
    assert amplitude_at(psi, 3) == 1.0
    for bad in (-1, 5, 1.5):
        with pytest.raises(InvalidInputError):
            amplitude_at(psi, bad)


@given(st.integers(3, 30), seeds, st.integers(0, 40))
def test_overlap_matches_explicit_inner_product(n, seed, shift):
    spec = CycleSpec(n)
    psi = random_state(n, seed)
    ts = np.array([0.0, 0.7, 13.0])
    got = overlap_series(spec, psi, ts, shift)
    for t, ov in zip(ts, got):
        ref = np.vdot(np.roll(psi.amplitudes, shift), evolve_cycle(spec, psi, t).amplitudes)
        assert abs(ov - ref) < 1e-10


def test_overlap_against_other_reference():
    spec = CycleSpec(12)
    psi, ref = random_state(12, 4), random_state(12, 5)
    got = overlap_series(spec, psi, [2.5], 3, ref)[0]
    want = np.vdot(np.roll(ref.amplitudes, 3), evolve_cycle(spec, psi, 2.5).amplitudes)
    assert abs(got - want) < 1e-12


def test_fidelity_bounds_and_weights():
    spec = CycleSpec(16)
    psi = random_state(16, 9)
    f = fidelity_series(spec, psi, np.linspace(0, 50, 101), 8)
    assert np.all((f >= 0) & (f <= 1))
    assert fourier_weights(spec, psi).sum() == pytest.approx(1.0)


def test_bandwidth_of_vertex_state_is_full():
    assert spectral_bandwidth(CycleSpec(8), WalkState.vertex(8)) == pytest.approx(4.0)
