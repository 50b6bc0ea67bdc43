"""
Reference experiments as deterministic tables.

Every experiment returns a :class:`Table`; nothing here touches the file
system except :func:`dynamic` when asked to dump stage edge lists.  Sweeps
may fan out over worker processes, but rows are always assembled in sweep
order.
"""

from __future__ import annotations

import math
import re
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from cyclewalk import analysis
from cyclewalk.errors import InvalidInputError
from cyclewalk.graphs import (
    build_relay_geometry,
    circular_mean_vertex,
    final_relay_fidelity,
    plan_relay,
    reference_state,
    run_switch_protocol,
    write_edge_list,
)
from cyclewalk.spectral import CycleSpec, WalkState, evolve_cycle, probability_profile
from cyclewalk.states import DistributionSpec, make_state


@dataclass
class Table:
    """Columns, rows and ``#`` comment lines placed before and after the rows."""

    columns: Sequence[str]
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    trailer: list = field(default_factory=list)


def parallel_map(func: Callable, items: Iterable, jobs: int = 1) -> list:
    """``map`` that keeps input order whether or not it runs in parallel."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def build_state(n: int, family: str, sigma0: float, center: int = 0) -> WalkState:
    """Initial state with the undersized-cycle warning silenced; callers
    report it through :func:`undersized_notes` instead."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return make_state(DistributionSpec(family, sigma0, center, n))


def undersized_notes(n: int, family: str, sigmas: Iterable[float]) -> list[str]:
    out = []
    for s in sigmas:
        if DistributionSpec(family, s, 0, n).undersized:
            out.append(f"warning: n={n} is below 10*sigma0 for sigma0={s:g}; tails wrap around the cycle")
    return out


_TAU_TOKEN = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*?\s*)?tau\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def parse_times(spec: str, tau: float | None = None) -> list[float]:
    """Parse ``"0, tau/2, tau, 2*tau, 12.5"`` into times.

    ``tau`` is only required when a token mentions it.
    """
    out = []
    for tok in str(spec).split(","):
        tok = tok.strip()
        if not tok:
            continue
        m = _TAU_TOKEN.match(tok)
        if m:
            if tau is None:
                raise InvalidInputError("time token uses tau but no transfer time is available")
            num = float(m.group(1)) if m.group(1) else 1.0
            den = float(m.group(2)) if m.group(2) else 1.0
            out.append(num * tau / den)
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise InvalidInputError(f"cannot parse time {tok!r}") from None
    if not out:
        raise InvalidInputError("no probe times given")
    return out


def parse_values(spec, cast=float) -> list:
    """Comma list and ``lo:hi[:step]`` ranges, e.g. ``"5:10"`` or ``"1,5,10"``."""
    out = []
    for tok in str(spec).split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            if ":" in tok:
                parts = [float(p) for p in tok.split(":")]
                lo, hi = parts[0], parts[1]
                step = parts[2] if len(parts) > 2 else 1.0
                if step <= 0:
                    raise ValueError
                k = int(math.floor((hi - lo) / step + 1e-9))
                out.extend(cast(lo + i * step) for i in range(k + 1))
            else:
                out.append(cast(float(tok)) if cast is int else cast(tok))
        except ValueError:
            raise InvalidInputError(f"cannot parse value list {spec!r}") from None
    if not out:
        raise InvalidInputError(f"empty value list {spec!r}")
    return out


# -- evolve -----------------------------------------------------------------------

def evolve(n=200, family="gaussian", sigma0=10.0, center=0, times="0,tau/2,tau", dt_divisor=200) -> Table:
    spec = CycleSpec(n)
    initial = build_state(n, family, sigma0, center)
    tau = None
    if "tau" in str(times):
        tau = analysis.find_transfer_time(spec, initial, dt_divisor).tau
    probes = parse_times(times, tau)
    table = Table(["time", "vertex", "probability"])
    table.notes.extend(undersized_notes(n, family, [sigma0]))
    if tau is not None:
        table.notes.append(f"tau={tau:.16e}")
    for t in probes:
        p = probability_profile(evolve_cycle(spec, initial, t))
        table.rows.extend((t, k, float(p[k])) for k in range(n))
    return table


# -- fig2 --------------------------------------------------------------------------

def _fig2_point(n: int, dt_divisor=200):
    tt = analysis.find_transfer_time(CycleSpec(n), WalkState.vertex(n), dt_divisor)
    return n, tt.tau, tt.value


def fig2(ns=range(4, 201), dt_divisor=200, jobs=1) -> Table:
    ns = [int(n) for n in ns]
    if not ns or min(ns) < 3:
        raise InvalidInputError("fig2 needs cycle sizes n >= 3")
    points = parallel_map(partial(_fig2_point, dt_divisor=dt_divisor), ns, jobs)
    table = Table(["n", "parity", "tau", "p_b_tau"])
    for n, tau, val in points:
        table.rows.append((n, "even" if n % 2 == 0 else "odd", tau, val))
    for parity in ("even", "odd"):
        try:
            fit = analysis.fit_power_law([(n, v) for n, _, v in points], parity)
        except InvalidInputError:
            continue
        table.trailer.append(
            f"fit quantity=p_b_tau parity={parity} exponent={fit.exponent:.16e} "
            f"prefactor={fit.prefactor:.16e} r_squared={fit.r_squared:.16e} count={fit.count}"
        )
    ns = np.array([p[0] for p in points], dtype=float)
    taus = np.array([p[1] for p in points])
    if ns.size >= 2:
        slope, intercept = np.polyfit(ns, taus, 1)
        table.trailer.append(f"fit quantity=tau_vs_n slope={slope:.16e} intercept={intercept:.16e}")
    return table


# -- fig3 --------------------------------------------------------------------------

def fig3(n=200, sigma0=(1.0, 5.0, 10.0), family="gaussian", t_max=None, samples=2001, dt_divisor=200) -> Table:
    spec = CycleSpec(n)
    t_max = 0.1 * n * n if t_max is None else float(t_max)
    times = np.linspace(0.0, t_max, int(samples))
    table = Table(["sigma0", "time", "fidelity"])
    table.notes.extend(undersized_notes(n, family, sigma0))
    for s in sigma0:
        initial = build_state(n, family, s)
        values = analysis.fidelity(spec, initial, times)
        table.rows.extend((s, float(t), float(v)) for t, v in zip(times, values))
        tt = analysis.find_transfer_time(spec, initial, dt_divisor)
        half = analysis.fidelity(spec, initial, 0.5 * tt.tau)
        table.trailer.append(
            f"transfer sigma0={s:g} tau={tt.tau:.16e} fidelity_tau={tt.value:.16e} "
            f"fidelity_half_tau={half:.16e}"
        )
    return table


# -- fig4a -------------------------------------------------------------------------

def _fig4a_point(args):
    n, family, s, max_multiple, dt_divisor = args
    spec = CycleSpec(n)
    initial = build_state(n, family, s)
    tt = analysis.find_transfer_time(spec, initial, dt_divisor)
    peaks = analysis.track_peaks(spec, initial, tt.tau, max_multiple, dt_divisor)
    return s, tt, peaks


def fig4a(n=100, sigma0=(5.0, 6.0, 7.0, 8.0, 9.0, 10.0), family="gaussian", max_multiple=None,
          full_horizon=False, dt_divisor=200, jobs=1) -> Table:
    if max_multiple is None:
        max_multiple = 10_000 if full_horizon else 100
    tasks = [(n, family, s, int(max_multiple), dt_divisor) for s in sigma0]
    table = Table(["peak_index", "peak_time", "peak_value", "sigma0"])
    table.notes.append(f"horizon={int(max_multiple)}*tau")
    table.notes.extend(undersized_notes(n, family, sigma0))
    for s, tt, peaks in parallel_map(_fig4a_point, tasks, jobs):
        missing = sum(not p.present for p in peaks)
        if missing:
            table.notes.append(f"warning: sigma0={s:g} has {missing} windows without a peak")
        table.rows.append((1, tt.tau, tt.value, s))
        table.rows.extend((p.index, p.peak_time, p.peak_value, s) for p in peaks)
        values = [p.peak_value for p in peaks if p.present]
        if values:
            table.trailer.append(
                f"envelope sigma0={s:g} tau={tt.tau:.16e} min_peak={min(values):.16e} "
                f"max_peak={max(values):.16e}"
            )
    return table


# -- fig4b -------------------------------------------------------------------------

def _fig4b_point(args):
    ratio, s, family, dt_divisor = args
    n = int(round(ratio * s))
    tt = analysis.find_transfer_time(CycleSpec(n), build_state(n, family, s), dt_divisor)
    return ratio, s, n, tt.tau, tt.value


def fig4b(ratios=tuple(range(10, 101)), sigma0=(5.0, 6.0, 7.0, 8.0, 9.0, 10.0), family="gaussian",
          dt_divisor=200, jobs=1) -> Table:
    tasks = [(r, s, family, dt_divisor) for s in sigma0 for r in ratios]
    points = parallel_map(_fig4b_point, tasks, jobs)
    table = Table(["n_over_sigma0", "sigma0", "n", "tau", "fidelity_at_tau"])
    table.rows.extend(points)
    pairs = [(n, tau) for _, _, n, tau, _ in points]
    if len(pairs) >= 1:
        c = analysis.fit_quadratic_prefactor(pairs)
        table.trailer.append(f"fit quantity=tau_vs_n2 prefactor={c:.16e}")
    if len({n for n, _ in pairs}) >= 5:
        fit = analysis.fit_power_law(pairs)
        table.trailer.append(
            f"fit quantity=tau_vs_n exponent={-fit.exponent:.16e} prefactor={fit.prefactor:.16e} "
            f"r_squared={fit.r_squared:.16e}"
        )
    return table


# -- fig5 --------------------------------------------------------------------------

FIG5_FAMILIES = ("gaussian", "logistic", "gumbel", "lorentz", "uniform")


def _fig5_point(args):
    family, n, s, dt_divisor = args
    spec = CycleSpec(n)
    initial = build_state(n, family, s)
    tt = analysis.find_transfer_time(spec, initial, dt_divisor)
    (second,) = analysis.track_peaks(spec, initial, tt.tau, 2, dt_divisor)
    return family, tt.tau, tt.value, second.peak_time, second.peak_value


def fig5(n=200, sigma0=10.0, families=FIG5_FAMILIES, dt_divisor=200, jobs=1) -> Table:
    tasks = [(f, n, sigma0, dt_divisor) for f in families]
    table = Table(["family", "tau", "F_at_tau", "t_2tau", "F_at_2tau"])
    for f in families:
        table.notes.extend(undersized_notes(n, f, [sigma0]))
    table.rows.extend(parallel_map(_fig5_point, tasks, jobs))
    return table


# -- dynamic -----------------------------------------------------------------------

def _relay_run(small_n, outer_n, sigma0, family, laps, probes_per_stage, convention):
    geom = build_relay_geometry(small_n, outer_n)
    plan = plan_relay(geom, sigma0, family, laps, convention=convention)
    t_end = plan.t2 + 2.0 * plan.tau_small
    probes = np.unique(np.concatenate([
        np.linspace(0.0, plan.t1, probes_per_stage + 1),
        np.linspace(plan.t1, plan.t2, probes_per_stage + 1),
        np.linspace(plan.t2, t_end, probes_per_stage + 1),
    ]))
    return plan, run_switch_protocol(plan.schedule, plan.initial, probes)


# a component counts as confining the walker above this mass
CONFINEMENT_TOL = 1e-6

RELAY_REFERENCES = {0: ("left_cycle", ("a", "b")), 1: ("major_cycle", ("a", "c")), 2: ("right_cycle", ("c", "d"))}


def dynamic(small_n=20, outer_n=60, sigma0=None, family="gaussian", laps=0, probes_per_stage=50,
            convention="laplacian", stage_dir=None) -> Table:
    sigma0 = small_n / 10.0 if sigma0 is None else float(sigma0)
    plan, samples = _relay_run(small_n, outer_n, sigma0, family, laps, probes_per_stage, convention)
    geom = plan.geometry
    if stage_dir is not None:
        out = Path(stage_dir)
        out.mkdir(parents=True, exist_ok=True)
        for k, topo in enumerate(geom.stages, start=1):
            write_edge_list(topo, out / f"stage{k}")

    refs = {
        (stage, pole): reference_state(plan, cycle, pole)
        for stage, (cycle, poles) in RELAY_REFERENCES.items()
        for pole in poles
    }
    comps = [[(c, geom.component_name(c)) for c in topo.components()] for topo in geom.stages]
    table = Table([
        "time", "stage", "center_vertex", "confinement_component", "dominant_component", "component_mass",
        "total_probability", "fidelity_vs_initial", "aligned_pole",
    ])
    table.notes.append(
        f"t1={plan.t1:.16e} t2={plan.t2:.16e} tau_s={plan.tau_small:.16e} tau_e={plan.tau_outer:.16e}"
    )
    for t, state in samples:
        stage = state.meta["stage"]
        p = probability_profile(state)
        masses = [(float(p[list(c)].sum()), name) for c, name in comps[stage]]
        mass, name = max(masses)
        fid, pole = max(
            (float(abs(np.vdot(refs[(stage, q)], state.amplitudes)) ** 2), q)
            for q in RELAY_REFERENCES[stage][1]
        )
        confined = name if mass >= 1.0 - CONFINEMENT_TOL else "none"
        table.rows.append((t, stage + 1, int(np.argmax(p)), confined, name, mass, float(p.sum()), fid, pole))

    final = final_relay_fidelity(plan, _sample_at(samples, plan.t2))
    table.trailer.append(f"final_fidelity sigma0={sigma0:g} value={final:.16e}")
    for width in relay_widths(small_n):
        wplan, wsamples = _relay_run(small_n, outer_n, width, family, laps, 1, convention)
        value = final_relay_fidelity(wplan, _sample_at(wsamples, wplan.t2))
        table.trailer.append(f"width_check sigma0={width:g} final_fidelity={value:.16e}")
    left_mean = circular_mean_vertex(_sample_at(samples, plan.t1), geom.orders["left_cycle"])
    table.trailer.append(f"center_at_t1 left_cycle_index={left_mean:.16e}")
    return table


def relay_widths(small_n: int) -> tuple[float, float, float]:
    return small_n / 40.0, small_n / 20.0, small_n / 10.0


def _sample_at(samples, t):
    return next(state for ts, state in samples if ts >= t)
