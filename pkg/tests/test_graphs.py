import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclewalk import CycleSpec, DistributionSpec, InvalidInputError, WalkState, evolve_cycle, make_state
from cyclewalk.errors import InconsistentStateError
from cyclewalk.experiments import build_state
from cyclewalk.graphs import (
    GraphTopology,
    Propagator,
    SwitchSchedule,
    build_relay_geometry,
    circular_mean_vertex,
    evolve_general,
    final_relay_fidelity,
    hamiltonian,
    plan_relay,
    read_edge_list,
    run_switch_protocol,
    write_edge_list,
)
from cyclewalk.spectral import probability_profile


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return WalkState(v / np.linalg.norm(v))


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 5)], [(-1, 2)], [(0, 1), (1, 0)]])
def test_topology_validation(edges):
    with pytest.raises(InvalidInputError):
        GraphTopology(5, edges)


def test_cycle_and_path():
    assert list(GraphTopology.cycle(5).degrees()) == [2] * 5
    assert list(GraphTopology.path(4).degrees()) == [1, 2, 2, 1]


def test_components():
    topo = GraphTopology(6, [(0, 1), (1, 2), (3, 4)])
    comps = sorted(sorted(c) for c in topo.components())
    assert comps == [[0, 1, 2], [3, 4], [5]]
    assert topo.component_of(4) == frozenset({3, 4})


def test_edge_list_round_trip(tmp_path):
    topo = GraphTopology(7, [(0, 1), (2, 5), (6, 3)])
    write_edge_list(topo, tmp_path / "g")
    back = read_edge_list(tmp_path / "g")
    assert back.vertex_count == 7 and back.edges == topo.edges


def test_edge_list_isolated_vertices_survive(tmp_path):
    topo = GraphTopology(4, [(0, 1)])
    write_edge_list(topo, tmp_path / "g")
    assert read_edge_list(tmp_path / "g").vertex_count == 4


def test_hamiltonian_conventions():
    topo = GraphTopology.path(3)
    lap = hamiltonian(topo, 2.0, "laplacian")
    adj = hamiltonian(topo, 2.0, "adjacency")
    assert np.allclose(lap, [[2, -2, 0], [-2, 4, -2], [0, -2, 2]])
    assert np.allclose(adj, [[0, 2, 0], [2, 0, 2], [0, 2, 0]])
    with pytest.raises(InvalidInputError):
        hamiltonian(topo, 1.0, "weighted")


@settings(max_examples=30)
@given(st.integers(3, 24), st.integers(0, 2**31), st.floats(-200, 200))
def test_adjacency_convention_matches_cycle_backend(n, seed, t):
    psi = random_state(n, seed)
    got = evolve_general(GraphTopology.cycle(n), psi, t, convention="adjacency").amplitudes
    assert np.allclose(got, evolve_cycle(CycleSpec(n), psi, t).amplitudes, atol=1e-10)


@settings(max_examples=30)
@given(st.integers(3, 24), st.sampled_from(["gaussian", "gumbel", "uniform", "delta"]), st.floats(-200, 200))
def test_laplacian_gives_conjugate_amplitudes_for_real_states(n, family, t):
    psi = build_state(n, family, n / 8, 1)
    ref = evolve_cycle(CycleSpec(n), psi, t).amplitudes
    got = evolve_general(GraphTopology.cycle(n), psi, t).amplitudes
    phase = np.exp(-2j * t)
    assert np.allclose(got, phase * ref.conj(), atol=1e-10)
    assert np.allclose(np.abs(got) ** 2, np.abs(ref) ** 2, atol=1e-10)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.floats(-50, 50))
def test_propagator_unitary_and_blockwise(seed, t):
    topo = GraphTopology(8, [(0, 1), (1, 2), (2, 0), (4, 5), (5, 6)])
    amps = np.zeros(8, dtype=complex)
    amps[:3] = random_state(3, seed).amplitudes
    out = Propagator(topo).apply(amps, t)
    assert abs(np.linalg.norm(out) - 1.0) < 1e-12
    assert np.all(out[3:] == 0)


def test_schedule_validation():
    a, b = GraphTopology.cycle(6), GraphTopology.path(6)
    with pytest.raises(InvalidInputError):
        SwitchSchedule(((a, 1.0), (b, 2.0)))
    with pytest.raises(InvalidInputError):
        SwitchSchedule(((a, 2.0), (b, 1.0), (a, None)))
    with pytest.raises(InvalidInputError):
        SwitchSchedule(((a, 1.0), (GraphTopology.cycle(7), None)))
    with pytest.raises(InvalidInputError):
        SwitchSchedule(())
    sched = SwitchSchedule(((a, 1.0), (b, 3.0), (a, None)))
    assert sched.switch_times == [1.0, 3.0]
    assert [sched.stage_index(t) for t in (0.5, 1.0, 2.9, 10.0)] == [0, 1, 1, 2]


def test_single_stage_protocol_matches_direct_evolution():
    topo = GraphTopology.cycle(9)
    psi = random_state(9, 7)
    out = run_switch_protocol(SwitchSchedule(((topo, None),)), psi, [3.0, 1.0])
    assert [t for t, _ in out] == [1.0, 3.0]
    assert np.allclose(out[1][1].amplitudes, evolve_general(topo, psi, 3.0).amplitudes, atol=1e-12)


def test_protocol_switch_is_continuous():
    a, b = GraphTopology.cycle(6), GraphTopology.path(6)
    psi = WalkState.vertex(6, 2)
    sched = SwitchSchedule(((a, 1.5), (b, None)))
    (_, end), = run_switch_protocol(sched, psi, [4.0])
    mid = evolve_general(a, psi, 1.5)
    assert np.allclose(end.amplitudes, evolve_general(b, mid, 2.5).amplitudes, atol=1e-12)
    assert end.meta["stage"] == 1


def test_protocol_input_errors():
    topo = GraphTopology(6, [(0, 1), (1, 2), (2, 0)], {"a": 0})
    sched = SwitchSchedule(((topo, None),))
    with pytest.raises(InvalidInputError):
        run_switch_protocol(sched, WalkState.vertex(6), [-1.0])
    with pytest.raises(InvalidInputError):
        run_switch_protocol(sched, WalkState.vertex(5), [1.0])
    with pytest.raises(InconsistentStateError):
        run_switch_protocol(sched, WalkState.vertex(6, 4), [1.0])


@pytest.mark.parametrize("small_n,outer_n", [(20, 60), (4, 12), (8, 10), (12, 40)])
def test_relay_geometry_stage_components(small_n, outer_n):
    g = build_relay_geometry(small_n, outer_n)
    assert len(g.orders["major_cycle"]) == outer_n
    assert len(set(g.orders["major_cycle"])) == outer_n
    names = [sorted(g.component_name(c) for c in topo.components()) for topo in g.stages]
    assert "left_cycle" in names[0]
    assert "major_cycle" in names[1] and "right_inner_arc" in names[1]
    assert "right_cycle" in names[2]
    for topo in g.stages:
        assert set(topo.degrees()) <= {0, 1, 2}
    # every stage-k cycle is a genuine cycle: all its vertices have degree 2
    for topo, name in zip(g.stages, ("left_cycle", "major_cycle", "right_cycle")):
        assert all(topo.degrees()[v] == 2 for v in g.orders[name])


@pytest.mark.parametrize("args", [(5, 20), (20, 61), (2, 10), (20, 8)])
def test_relay_geometry_rejects(args):
    with pytest.raises(InvalidInputError):
        build_relay_geometry(*args)


def test_relay_run_is_unitary_and_leak_free():
    g = build_relay_geometry(20, 60)
    plan = plan_relay(g, 2.0)
    assert plan.t1 == pytest.approx(2 * plan.tau_small)
    assert plan.t2 == pytest.approx(plan.t1 + plan.tau_outer)
    probes = np.linspace(0, plan.t2 + 10, 60)
    outside_left = np.setdiff1d(np.arange(g.vertex_count), g.orders["left_cycle"])
    right_inner = g.groups["right_inner_arc"]
    masses = []
    for t, state in run_switch_protocol(plan.schedule, plan.initial, probes):
        p = probability_profile(state)
        assert abs(p.sum() - 1.0) < 1e-11
        if t < plan.t1:
            assert p[outside_left].max() == 0.0
        elif t < plan.t2:
            assert p[right_inner].max() == 0.0
        else:
            masses.append(p[g.orders["right_cycle"]].sum())
    assert np.ptp(masses) < 1e-12


def test_relay_centre_returns_to_a_before_switch():
    g = build_relay_geometry(20, 60)
    plan = plan_relay(g, 2.0)
    (_, state), = run_switch_protocol(plan.schedule, plan.initial, [plan.t1])
    assert circular_mean_vertex(state, g.orders["left_cycle"]) == pytest.approx(0.0, abs=1e-9)


def test_relay_final_fidelity_grows_with_width():
    g = build_relay_geometry(20, 60)
    finals = []
    for sigma0 in (0.5, 1.0, 2.0):
        plan = plan_relay(g, sigma0)
        (_, state), = run_switch_protocol(plan.schedule, plan.initial, [plan.t2])
        finals.append(final_relay_fidelity(plan, state))
    assert finals[0] < finals[1] < finals[2]


def test_circular_mean_degenerate():
    flat = WalkState(np.full(8, 1 / math.sqrt(8)))
    assert math.isnan(circular_mean_vertex(flat, list(range(8))))


def test_plan_relay_rejects_negative_laps():
    with pytest.raises(InvalidInputError):
        plan_relay(build_relay_geometry(20, 60), 2.0, laps=-1)


def test_embedded_gaussian_matches_cycle_state():
    g = build_relay_geometry(20, 60)
    amps = make_state(DistributionSpec("gaussian", 2.0, 0, 20)).amplitudes
    full = g.embed("left_cycle", amps)
    assert np.allclose(full[g.orders["left_cycle"]], amps)
    with pytest.raises(InvalidInputError):
        g.embed("left_cycle", amps[:5])
