"""
CTQW on arbitrary finite graphs and a switched two-cycle relay.

The Hamiltonian carries the degree on the diagonal and ``-gamma`` on each
edge (the graph Laplacian scaled by gamma).  Evolution uses a dense
Hermitian eigendecomposition and is exact in time; it is meant for graphs
of up to a couple of thousand vertices.

On a pure cycle the Laplacian propagator equals ``exp(-2i gamma t)
exp(+i A t)``, so for real initial states its amplitudes are the complex
conjugates of the circulant propagator's.  Probabilities and fidelities
against real references coincide.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from cyclewalk.errors import InconsistentStateError, InvalidInputError
from cyclewalk.spectral import CycleSpec, WalkState, probability_profile
from cyclewalk.states import DistributionSpec, make_state

CONVENTIONS = ("laplacian", "adjacency")
LEAK_TOL = 1e-9


@dataclass(frozen=True)
class GraphTopology:
    """Vertex count, undirected edge set and optional vertex labels."""

    vertex_count: int
    edges: frozenset = frozenset()
    labels: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        n = int(self.vertex_count)
        if n < 1:
            raise InvalidInputError("a graph needs at least one vertex")
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidInputError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidInputError(f"edge ({u}, {v}) outside 0..{n - 1}")
            e = (min(u, v), max(u, v))
            if e in norm:
                raise InvalidInputError(f"duplicate edge {e}")
            norm.add(e)
        object.__setattr__(self, "vertex_count", n)
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def cycle(cls, n: int) -> "GraphTopology":
        return cls(n, frozenset((k, (k + 1) % n) for k in range(n)))

    @classmethod
    def path(cls, n: int) -> "GraphTopology":
        return cls(n, frozenset((k, k + 1) for k in range(n - 1)))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.vertex_count, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def component_labels(self) -> np.ndarray:
        """Connected-component index of every vertex."""
        n = self.vertex_count
        if not self.edges:
            return np.arange(n)
        u, v = np.array(sorted(self.edges)).T
        adj = coo_matrix((np.ones(u.size), (u, v)), shape=(n, n))
        return connected_components(adj, directed=False)[1]

    def component_of(self, vertex: int) -> frozenset:
        comp = self.component_labels()
        return frozenset(np.nonzero(comp == comp[vertex])[0].tolist())

    def components(self) -> list[frozenset]:
        comp = self.component_labels()
        return [frozenset(np.nonzero(comp == c)[0].tolist()) for c in np.unique(comp)]


def write_edge_list(topology: GraphTopology, path) -> None:
    """Write ``vertices N`` followed by one ``u v`` line per edge."""
    lines = [f"vertices {topology.vertex_count}"]
    lines += [f"{u} {v}" for u, v in sorted(topology.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> GraphTopology:
    text = Path(path).read_text().split("\n")
    rows = [ln.split() for ln in text if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][0] != "vertices" or len(rows[0]) != 2:
        raise InvalidInputError(f"{path}: first line must be 'vertices N'")
    try:
        n = int(rows[0][1])
        edges = []
        for r in rows[1:]:
            if len(r) != 2:
                raise ValueError(r)
            edges.append((int(r[0]), int(r[1])))
    except ValueError as exc:
        raise InvalidInputError(f"{path}: malformed edge list ({exc})") from None
    return GraphTopology(n, frozenset(edges))


def hamiltonian(topology: GraphTopology, gamma: float = 1.0, convention: str = "laplacian") -> np.ndarray:
    """Real symmetric Hamiltonian of a graph.

    ``laplacian`` is ``gamma * (D - A)``: degree on the diagonal and
    ``-gamma`` on edges.  ``adjacency`` is ``gamma * A``, the convention of
    the cycle backend, so on a cycle it reproduces those amplitudes exactly.
    On a cycle ``D - A = 2 - A``, so for real initial states the two give
    complex-conjugate amplitudes and identical probabilities.
    """
    if convention not in CONVENTIONS:
        raise InvalidInputError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    n = topology.vertex_count
    H = np.zeros((n, n))
    hop = -gamma if convention == "laplacian" else gamma
    for u, v in topology.edges:
        H[u, v] = H[v, u] = hop
    if convention == "laplacian":
        H[np.diag_indices(n)] = gamma * topology.degrees()
    return H


class Propagator:
    """Cached eigendecomposition of one fixed Hamiltonian.

    Each connected component is diagonalised on its own, so amplitude can
    never leak between components, not even at round-off level.
    """

    def __init__(self, topology: GraphTopology, gamma: float = 1.0, convention: str = "laplacian"):
        self.topology = topology
        H = hamiltonian(topology, gamma, convention)
        self.blocks = []
        for comp in topology.components():
            idx = np.array(sorted(comp))
            energies, vectors = np.linalg.eigh(H[np.ix_(idx, idx)])
            self.blocks.append((idx, energies, vectors))

    def apply(self, amplitudes: np.ndarray, t: float) -> np.ndarray:
        amplitudes = np.asarray(amplitudes, dtype=complex)
        out = np.zeros_like(amplitudes)
        for idx, energies, V in self.blocks:
            out[idx] = V @ (np.exp(-1j * energies * t) * (V.T @ amplitudes[idx]))
        return out


def evolve_general(
    topology: GraphTopology,
    initial: WalkState,
    t: float,
    gamma: float = 1.0,
    convention: str = "laplacian",
) -> WalkState:
    """Apply ``exp(-i H t)`` for a fixed topology."""
    if initial.n != topology.vertex_count:
        raise InvalidInputError(
            f"state has {initial.n} vertices but the graph has {topology.vertex_count}"
        )
    amps = Propagator(topology, gamma, convention).apply(initial.amplitudes, t)
    return WalkState(amps, initial.time + t, dict(initial.meta))


@dataclass(frozen=True)
class SwitchSchedule:
    """Ordered stages ``(topology, until_time)``; the last stage is open-ended.

    ``until_time`` of the final stage must be ``None``.  ``times`` carries
    any derived switch instants (t1, t2, ...) for reporting.
    """

    stages: tuple
    gamma: float = 1.0
    convention: str = "laplacian"
    times: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        stages = tuple((topo, None if until is None else float(until)) for topo, until in self.stages)
        if not stages:
            raise InvalidInputError("schedule needs at least one stage")
        if stages[-1][1] is not None:
            raise InvalidInputError("final stage must be open-ended (until_time=None)")
        ends = [u for _, u in stages[:-1]]
        if any(u is None for u in ends):
            raise InvalidInputError("only the final stage may be open-ended")
        if ends and (ends[0] < 0 or any(b <= a for a, b in zip(ends, ends[1:]))):
            raise InvalidInputError("switch times must be non-negative and strictly increasing")
        sizes = {topo.vertex_count for topo, _ in stages}
        if len(sizes) != 1:
            raise InvalidInputError("all stages must share the same vertex set")
        if self.convention not in CONVENTIONS:
            raise InvalidInputError(f"convention must be one of {CONVENTIONS}")
        object.__setattr__(self, "stages", stages)

    @property
    def switch_times(self) -> list[float]:
        return [u for _, u in self.stages[:-1]]

    def stage_index(self, t: float) -> int:
        for k, (_, until) in enumerate(self.stages):
            if until is None or t < until:
                return k
        return len(self.stages) - 1


def active_vertices(topology: GraphTopology) -> frozenset:
    """Vertices the walker may occupy: the component of label ``a`` when
    labelled, otherwise every vertex with at least one edge."""
    if "a" in topology.labels:
        return topology.component_of(topology.labels["a"])
    return frozenset(np.nonzero(topology.degrees() > 0)[0].tolist())


def run_switch_protocol(
    config: SwitchSchedule,
    initial: WalkState,
    probes: Iterable[float],
) -> list[tuple[float, WalkState]]:
    """Evolve piecewise through the schedule and sample at ``probes``.

    The state is carried continuously across each switch; within a stage the
    stage's own Hamiltonian applies.  Results come back in ascending probe
    order.
    """
    probes = sorted(float(t) for t in probes)
    if probes and probes[0] < 0:
        raise InvalidInputError(f"probe time {probes[0]:g} is negative")
    first = config.stages[0][0]
    if initial.n != first.vertex_count:
        raise InvalidInputError(
            f"state has {initial.n} vertices but the graph has {first.vertex_count}"
        )
    allowed = np.zeros(initial.n, dtype=bool)
    allowed[list(active_vertices(first))] = True
    stray = float(probability_profile(initial)[~allowed].sum())
    if stray > LEAK_TOL:
        raise InconsistentStateError(
            f"initial state has probability {stray:.3g} outside the active part of stage 1"
        )

    props = [Propagator(topo, config.gamma, config.convention) for topo, _ in config.stages]
    amps = np.array(initial.amplitudes)
    now, k = 0.0, 0
    out = []
    for t in probes:
        while config.stages[k][1] is not None and t >= config.stages[k][1]:
            until = config.stages[k][1]
            amps = props[k].apply(amps, until - now)
            now, k = until, k + 1
        amps = props[k].apply(amps, t - now)
        now = t
        # WalkState re-checks the norm; drift across stages stays ~1e-14
        out.append((t, WalkState(amps, t, {"stage": k})))
    return out


# -- relay geometry -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RelayGeometry:
    """Two small cycles joined by top and bottom branches.

    Vertex layout: left cycle ``0..s-1`` (a = 0, b = s/2), right cycle
    ``s..2s-1`` (c = s, d = s + s/2), then the top and bottom branches.  The
    outer arc of each small cycle spans offsets ``-h..h`` around its pole
    (h = s // 4); the rest is the inner arc.
    """

    small_n: int
    outer_n: int
    stage1: GraphTopology
    stage2: GraphTopology
    stage3: GraphTopology
    labels: dict
    groups: dict
    orders: dict

    @property
    def stages(self) -> tuple[GraphTopology, GraphTopology, GraphTopology]:
        return self.stage1, self.stage2, self.stage3

    @property
    def vertex_count(self) -> int:
        return self.stage1.vertex_count

    def component_name(self, vertices: frozenset) -> str:
        for name in ("left_cycle", "right_cycle", "major_cycle"):
            if vertices == frozenset(self.orders[name]):
                return name
        for name in ("left_inner_arc", "right_inner_arc"):
            if vertices == frozenset(self.groups[name]):
                return name
        return "other"

    def embed(self, cycle: str, amplitudes: Sequence[complex]) -> np.ndarray:
        """Place a vector given in cyclic order on ``cycle`` into the full graph."""
        order = self.orders[cycle]
        amps = np.asarray(amplitudes)
        if amps.size != len(order):
            raise InvalidInputError(f"{cycle} has {len(order)} vertices, got {amps.size} amplitudes")
        full = np.zeros(self.vertex_count, dtype=complex)
        full[order] = amps
        return full


def build_relay_geometry(small_n: int, outer_n: int) -> RelayGeometry:
    """Topologies for the three stages of the switched relay.

    1. left cycle closed; the right cycle's outer arc hangs on the open
       top and bottom branches;
    2. the left outer arc is rerouted onto the branches, closing the major
       cycle through a and c;
    3. the right outer arc is switched back onto its inner arc, closing the
       right cycle around c and d.
    """
    s, m = int(small_n), int(outer_n)
    if s != small_n or m != outer_n or s < 4 or m < 4 or s % 2 or m % 2:
        raise InvalidInputError("small_n and outer_n must be even integers >= 4")
    h = s // 4
    branch = (m - (4 * h + 2)) // 2
    if branch < 0:
        raise InvalidInputError(
            f"outer_n={m} too small for small_n={s}; need at least {4 * h + 2}"
        )

    def left(p):
        return p % s

    def right(q):
        return s + q % s

    top = [2 * s + i for i in range(branch)]
    bottom = [2 * s + branch + i for i in range(branch)]
    n_total = 2 * s + 2 * branch

    left_ring = {(left(p), left(p + 1)) for p in range(s)}
    right_inner = {(right(q), right(q + 1)) for q in range(h + 1, s - h - 1)}
    right_outer = {(right(q), right(q + 1)) for q in range(-h, h)}
    left_outer = {(left(p), left(p + 1)) for p in range(-h, h)}
    left_inner = {(left(p), left(p + 1)) for p in range(h + 1, s - h - 1)}

    # branch chains run from the left junction to the right junction
    top_chain = [left(h)] + top + [right(h)]
    bottom_chain = [left(-h)] + bottom + [right(-h)]
    chain_edges = {(u, v) for chain in (top_chain, bottom_chain) for u, v in zip(chain, chain[1:])}
    left_junction = {(top_chain[0], top_chain[1]), (bottom_chain[0], bottom_chain[1])}
    right_junction = {(top_chain[-2], top_chain[-1]), (bottom_chain[-2], bottom_chain[-1])}
    if branch == 0:
        # no branch vertices: the outer arcs meet directly
        left_junction = right_junction = chain_edges
    right_close = {(right(h), right(h + 1)), (right(-h), right(-h - 1))}

    stage1 = left_ring | right_inner | right_outer | (chain_edges - left_junction)
    stage2 = left_outer | left_inner | right_inner | right_outer | chain_edges
    stage3 = left_outer | left_inner | right_inner | right_outer | right_close | (chain_edges - right_junction)

    labels = {"a": left(0), "b": left(s // 2), "c": right(0), "d": right(s // 2)}
    groups = {
        "left_outer_arc": [left(p) for p in range(-h, h + 1)],
        "left_inner_arc": [left(p) for p in range(h + 1, s - h)],
        "right_outer_arc": [right(q) for q in range(-h, h + 1)],
        "right_inner_arc": [right(q) for q in range(h + 1, s - h)],
        "top": top,
        "bottom": bottom,
    }
    major = (
        [left(p) for p in range(0, h + 1)]
        + top
        + [right(q) for q in range(h, -h - 1, -1)]
        + bottom[::-1]
        + [left(p) for p in range(-h, 0)]
    )
    orders = {
        "left_cycle": [left(p) for p in range(s)],
        "right_cycle": [right(q) for q in range(s)],
        "major_cycle": major,
    }
    topo = [
        GraphTopology(n_total, frozenset((min(u, v), max(u, v)) for u, v in e), labels)
        for e in (stage1, stage2, stage3)
    ]
    return RelayGeometry(s, m, *topo, labels=labels, groups=groups, orders=orders)


@dataclass(frozen=True, eq=False)
class RelayPlan:
    geometry: RelayGeometry
    schedule: SwitchSchedule
    initial: WalkState
    t1: float
    t2: float
    tau_small: float
    tau_outer: float
    distribution: DistributionSpec


def plan_relay(
    geometry: RelayGeometry,
    sigma0: float,
    family: str = "gaussian",
    laps: int = 0,
    gamma: float = 1.0,
    convention: str = "laplacian",
) -> RelayPlan:
    """Schedule ``t1 = 2 (laps + 1) tau_s`` and ``t2 = t1 + tau_e``.

    Both transfer times are measured on the bare cycles: tau_s on the small
    cycle, tau_e on the major cycle (a to c is antipodal there).
    """
    from cyclewalk.analysis import find_transfer_time

    if laps < 0:
        raise InvalidInputError("laps must be >= 0")
    s, m = geometry.small_n, geometry.outer_n
    dist = DistributionSpec(family, sigma0, 0, s)
    with warnings.catch_warnings():
        # wide packets on the small cycle are the point of the relay
        warnings.simplefilter("ignore", UserWarning)
        small_state = make_state(dist)
        outer_state = make_state(DistributionSpec(family, sigma0, 0, m))
    tau_s = find_transfer_time(CycleSpec(s, gamma), small_state).tau
    tau_e = find_transfer_time(CycleSpec(m, gamma), outer_state).tau
    t1 = 2.0 * (laps + 1) * tau_s
    t2 = t1 + tau_e
    stages = ((geometry.stage1, t1), (geometry.stage2, t2), (geometry.stage3, None))
    schedule = SwitchSchedule(
        stages, gamma, convention,
        times={"t1": t1, "t2": t2, "tau_s": tau_s, "tau_e": tau_e},
    )
    initial = WalkState(geometry.embed("left_cycle", small_state.amplitudes), 0.0, {"distribution": dist.to_dict()})
    return RelayPlan(geometry, schedule, initial, t1, t2, tau_s, tau_e, dist)


def reference_state(plan: RelayPlan, cycle: str, pole: str) -> np.ndarray:
    """The initial profile transported onto ``cycle`` and centred at ``pole``."""
    order = plan.geometry.orders[cycle]
    size = len(order)
    center = order.index(plan.geometry.labels[pole])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        local = make_state(DistributionSpec(plan.distribution.family, plan.distribution.sigma0, center, size))
    return plan.geometry.embed(cycle, local.amplitudes)


def circular_mean_vertex(state: WalkState, order: Sequence[int]) -> float:
    """Circular mean position along a cycle, in units of its cyclic index.

    Returns NaN when the profile has no preferred direction.
    """
    p = probability_profile(state)[list(order)]
    size = len(order)
    z = np.sum(p * np.exp(2j * np.pi * np.arange(size) / size))
    if abs(z) < 1e-12:
        return math.nan
    pos = (np.angle(z) * size / (2 * np.pi)) % size
    return 0.0 if pos > size - 1e-9 else float(pos)


def final_relay_fidelity(plan: RelayPlan, state: WalkState) -> float:
    """Fidelity of a confined state against the initial profile placed at c."""
    ref = reference_state(plan, "right_cycle", "c")
    return float(abs(np.vdot(ref, state.amplitudes)) ** 2)
