"""Alternating shortening driver and family deformation.

``shorten`` iterates one Birkhoff pass (re-entering the small-segment
regime) followed by a run of backtracked descent steps until the cycle
either collapses below the target length epsilon or stabilizes (descent
norm下 below tolerance), in which case the carried closed geodesic is
extracted.  Traces record lengths, norms and type data; lengths are
monotone along every trace up to rounding slack.

``deform_family`` runs one driver per sample of a one-parameter family on
a synchronized schedule (same phase sequence across the grid), freezing
samples that finish; the continuity report lists the largest pointwise
jump between neighbouring samples per round, and the type report lists
every change of the projected endpoint-identification flags.

``contract_underlying`` implements the tail of the story on the
underlying space: once every cycle is shorter than epsilon, push the
basepoints radially away from a clear regular point p and contract
everything to a point in the complement of p.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .atlas import OrbifoldModel, OrbifoldPoint
from .birkhoff import ordered_birkhoff
from .config import DriverConfig
from .cycles import (CycleKind, GCycle, OrderedCycle, UnderlyingCycle,
                     pointwise_distance, project_underlying)
from .descent import (clusters, descent_step, descent_vector,
                      extract_geodesic, max_step, stability_test)
from .errors import MaxItersExceeded, NoClearPoint, StepTooLarge
from .geometry import bdist, bexp, blog


@dataclass
class TraceEntry:
    iteration: int
    phase: str               # "birkhoff" or "descent"
    length: float
    norm: float
    flags: tuple


@dataclass
class ShorteningTrace:
    entries: List[TraceEntry] = field(default_factory=list)
    min_norm_above_eps: float = np.inf
    stall_events: List[int] = field(default_factory=list)
    snapshots: List[Tuple[int, OrderedCycle]] = field(default_factory=list)

    def lengths(self):
        return np.array([e.length for e in self.entries])

    def monotone(self, slack: float = 1e-9) -> bool:
        l = self.lengths()
        return bool(np.all(np.diff(l) <= slack))

    def record(self, it, phase, oc, norm, flags=()):
        self.entries.append(TraceEntry(it, phase, oc.length(), norm,
                                       tuple(sorted(flags))))


@dataclass
class ShortenResult:
    outcome: str             # "reached_epsilon" | "stable_found" | "max_iters" | "stalled"
    final: OrderedCycle
    trace: ShorteningTrace
    geodesic: Optional[GCycle] = None

    @property
    def length(self) -> float:
        return self.final.length()


def _cycle_flags(oc: OrderedCycle, tol: float):
    c = oc.cycle
    model = c.model
    ends = c.ends()
    n, m = c.n_half, c.m
    q = model.orbit_distance
    pts = {
        "c0": c.start[0],
        "c1m": ends[n - 1],
        "c1p": c.start[n],
        "c2": ends[m - 1],
    }
    flags = set()
    if q(pts["c0"], pts["c1m"]) <= tol and q(pts["c1p"], pts["c2"]) <= tol:
        flags.add("two_loops")
    if q(pts["c0"], pts["c2"]) <= tol and q(pts["c1m"], pts["c1p"]) <= tol:
        flags.add("single_loop")
    if all(q(pts["c0"], pts[k]) <= tol for k in ("c1m", "c1p", "c2")):
        flags.add("figure_eight")
    if oc.length() <= tol:
        flags.add("constant")
    return flags


class ShortenState:
    """Stepwise driver so families can advance many samples in lockstep."""

    def __init__(self, oc: OrderedCycle, cfg: DriverConfig,
                 keep_snapshots: bool = False, stall_rounds: int = 10):
        self.model = oc.cycle.model
        self.cfg = cfg.validated(self.model.delta)
        self.oc = oc
        self.trace = ShorteningTrace()
        self.iteration = 0
        self.tau = None
        self.result: Optional[ShortenResult] = None
        self.keep_snapshots = keep_snapshots
        self.stall_rounds = stall_rounds
        self._no_progress = 0
        self._flag_tol = max(10 * self.model.tol.tau_match(self.model.delta),
                             1e-9)

    @property
    def done(self) -> bool:
        return self.result is not None

    def _finish(self, outcome, geodesic=None):
        self.result = ShortenResult(outcome, self.oc, self.trace, geodesic)
        return self.result

    def _check_terminal(self, norm: Optional[float]) -> bool:
        L = self.oc.length()
        if L < self.cfg.epsilon:
            self._finish("reached_epsilon")
            return True
        if norm is not None:
            if L >= self.cfg.epsilon:
                self.trace.min_norm_above_eps = min(
                    self.trace.min_norm_above_eps, norm)
            if norm < self.cfg.tol_stable:
                g = extract_geodesic(self.oc.cycle,
                                     tol=max(100 * self.cfg.tol_stable, 1e-6))
                self._finish("stable_found", geodesic=g)
                return True
        return False

    def round(self) -> None:
        """One Birkhoff pass plus a run of backtracked descent steps."""
        if self.done:
            return
        cfg = self.cfg
        if self._check_terminal(None):
            return
        length_at_round_start = self.oc.length()
        _, self.oc = ordered_birkhoff(self.oc, cfg.breaks, samples_per_stage=2)
        rep = descent_vector(self.oc, tau_merge=cfg.tau_merge)
        self.trace.record(self.iteration, "birkhoff", self.oc, rep.norm,
                          _cycle_flags(self.oc, self._flag_tol))
        if self.keep_snapshots:
            self.trace.snapshots.append((self.iteration, self.oc))
        if self._check_terminal(rep.norm):
            return
        small_cap = self.model.delta / 4
        for _ in range(cfg.descent_steps_per_round):
            if float(np.max(self.oc.cycle.segment_lengths())) > small_cap + 1e-12:
                break
            rep = descent_vector(self.oc, tau_merge=cfg.tau_merge)
            if self._check_terminal(rep.norm):
                return
            cap = max_step(self.oc, rep)
            tau = cap if self.tau is None else min(cap,
                                                   self.tau * cfg.backtrack_grow)
            accepted = False
            L0 = self.oc.length()
            for _ in range(40):
                try:
                    cand, _ = descent_step(self.oc, tau,
                                           tau_merge=cfg.tau_merge, report=rep)
                except StepTooLarge:
                    tau *= cfg.backtrack_shrink
                    continue
                if L0 - cand.length() >= tau * rep.norm * cfg.accept_factor:
                    accepted = True
                    break
                tau *= cfg.backtrack_shrink
                if tau < 1e-12 * self.model.delta:
                    break
            if not accepted:
                self.trace.stall_events.append(self.iteration)
                break
            self.oc = cand
            self.tau = tau
            self.iteration += 1
            # flags only change across Birkhoff/kind events; reuse the
            # round's flags on descent entries to keep the loop lean
            self.trace.record(self.iteration, "descent", self.oc, rep.norm,
                              self.trace.entries[-1].flags)
            if self._check_terminal(rep.norm):
                return
            if self.iteration >= cfg.max_iters:
                self._finish("max_iters")
                return
        self.iteration += 1
        if self.iteration >= cfg.max_iters:
            self._finish("max_iters")
            return
        # a stall verdict needs sustained lack of progress across rounds,
        # not isolated backtracking failures
        if self.oc.length() > length_at_round_start - 1e-12:
            self._no_progress += 1
        else:
            self._no_progress = 0
        if self._no_progress >= self.stall_rounds:
            self._finish("stalled")


def shorten(oc: OrderedCycle, cfg: DriverConfig,
            keep_snapshots: bool = False) -> ShortenResult:
    """Run the alternating driver to termination.

    Raises MaxItersExceeded with the best cycle attached when the
    iteration budget runs out (a possible near-stable configuration).
    """
    state = ShortenState(oc, cfg, keep_snapshots=keep_snapshots)
    while not state.done:
        state.round()
    res = state.result
    if res.outcome == "max_iters":
        raise MaxItersExceeded("shortening did not terminate",
                               best=res.final, trace=res.trace)
    return res


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

@dataclass
class FamilyTrace:
    grid: np.ndarray
    results: List[ShortenResult]
    continuity: List[float]          # max neighbour jump per round
    flags_per_round: List[List[tuple]]
    runtime: float = 0.0

    def outcomes(self):
        return [r.outcome for r in self.results]

    def found_lengths(self):
        out = []
        for r in self.results:
            if r.outcome == "stable_found" and r.geodesic is not None:
                out.append(r.geodesic.length())
            elif r.outcome in ("stalled", "max_iters"):
                out.append(r.length)
        return out

    def min_detected_length(self):
        ls = self.found_lengths()
        return min(ls) if ls else None


def deform_family(samples: Sequence[OrderedCycle], cfg: DriverConfig,
                  grid: Optional[np.ndarray] = None,
                  max_rounds: int = 4000,
                  continuity_samples: int = 12) -> FamilyTrace:
    """Shorten every sample of a family on a synchronized schedule.

    Samples below epsilon (or otherwise finished) freeze; the others run
    one driver round per family round.  The continuity entry of a round is
    the largest pointwise quotient-space jump between neighbouring
    samples' current cycles.
    """
    t0 = time.perf_counter()
    grid = np.linspace(0.0, 1.0, len(samples)) if grid is None else grid
    states = [ShortenState(s, cfg) for s in samples]
    continuity: List[float] = []
    flags_hist: List[List[tuple]] = []
    for _ in range(max_rounds):
        if all(st.done for st in states):
            break
        for st in states:
            if not st.done:
                st.round()
                if st.iteration >= cfg.max_iters and not st.done:
                    st._finish("max_iters")
        jump = 0.0
        for a, b in zip(states[:-1], states[1:]):
            jump = max(jump, pointwise_distance(a.oc.cycle, b.oc.cycle,
                                                continuity_samples))
        continuity.append(jump)
        flags_hist.append([tuple(sorted(_cycle_flags(st.oc, st._flag_tol)))
                           for st in states])
    results = []
    for st in states:
        if not st.done:
            st._finish("max_iters")
        results.append(st.result)
    return FamilyTrace(np.asarray(grid, float), results, continuity,
                       flags_hist, time.perf_counter() - t0)


def type_invariance_report(trace: FamilyTrace) -> dict:
    """Per-sample type flags over the rounds plus every observed transition."""
    transitions = []
    for si in range(len(trace.results)):
        prev = None
        for ri, flags in enumerate(trace.flags_per_round):
            cur = flags[si]
            if prev is not None and cur != prev:
                transitions.append({"sample": si, "round": ri,
                                    "before": prev, "after": cur})
            prev = cur
    return {
        "rounds": len(trace.flags_per_round),
        "samples": len(trace.results),
        "transitions": transitions,
    }


# ---------------------------------------------------------------------------
# contraction of the underlying family
# ---------------------------------------------------------------------------

def _normal_coords(model, p, x):
    """(radius, unit direction) of x in the geodesic normal chart at p."""
    v = blog(model.space, p, x)
    r = float(geo.norm(model.space, v))
    return r, (v / r if r > 1e-300 else v)


def _witness_pair(model, a_pos, b_pos):
    d, pa, pb = model.quotient_distance_witness(OrbifoldPoint(0, a_pos),
                                                OrbifoldPoint(0, b_pos))
    return d, pa, pb


def contract_underlying(family: Sequence[UnderlyingCycle], epsilon: float,
                        n_frames: int = 6) -> dict:
    """Contract a family of short underlying cycles to a constant point.

    Stage one pushes every basepoint radially out of the ball around a
    clear regular point p (the [0, 2eps] radial range maps to [eps, 2eps],
    nothing moves beyond 2eps) and carries each cycle along by the
    translation of its basepoint expressed in the normal chart at p.
    Stage two shrinks each cycle onto its basepoint; stage three slides
    the constant cycles to a common point q inside the complement of p.
    Returns frames over a [0, 3] grid plus clearance diagnostics.
    """
    if not family:
        raise ValueError("empty family")
    model = family[0].model
    space = model.space
    base_pts = []
    for u in family:
        base_pts.append(u.pts0[0])
        base_pts.append(u.pts1[0])
    candidates = []
    for x in model.region_samples():
        if model.singular_distance(x) < 3 * epsilon:
            continue
        d = min(model.quotient_distance(OrbifoldPoint(0, x), b)
                for b in base_pts)
        candidates.append((d, x))
    if not candidates:
        raise NoClearPoint("epsilon too large for this model")
    candidates.sort(key=lambda t: -t[0])
    stripe_clear, p = candidates[0]
    if stripe_clear <= 1.25 * epsilon:
        raise NoClearPoint("no regular point clears the basepoint stripes")
    q = max(model.region_samples(),
            key=lambda x: model.quotient_distance(OrbifoldPoint(0, x),
                                                  OrbifoldPoint(0, p)))

    def dist_to_p(x_pos):
        return model.quotient_distance(OrbifoldPoint(0, p),
                                       OrbifoldPoint(0, x_pos))

    def translate_half(pts, delta_v, p_lift, s):
        """Translate points by s*delta_v in the normal chart at p_lift."""
        out = []
        for x in pts:
            d, pl, xl = _witness_pair(model, p_lift, x.position)
            w = blog(space, pl, xl)
            out.append(OrbifoldPoint(x.chart, bexp(space, pl,
                                                   w + s * delta_v)))
        return out

    grid1 = np.linspace(0.0, 1.0, n_frames)
    frames = []
    times = []
    # stage 1: radial pushout of the basepoints
    deltas = []
    for u in family:
        half_deltas = []
        for pts in (u.pts0, u.pts1):
            b = pts[0]
            d, pl, bl = _witness_pair(model, p, b.position)
            if d >= 2 * epsilon or d < 1e-12:
                half_deltas.append((pl, np.zeros(space.dim)))
                continue
            r, udir = _normal_coords(model, pl, bl)
            r_new = epsilon + r / 2
            half_deltas.append((pl, (r_new - r) * udir))
        deltas.append(half_deltas)
    for s in grid1:
        frame = []
        for u, (d0, d1) in zip(family, deltas):
            h0 = translate_half(u.pts0, d0[1], d0[0], float(s))
            h1 = translate_half(u.pts1, d1[1], d1[0], float(s))
            frame.append(UnderlyingCycle(model, u.ts0, u.ts1, h0, h1))
        frames.append(frame)
        times.append(float(s))
    pushed = frames[-1]
    # stage 2: shrink each half onto its basepoint
    for s in grid1[1:]:
        frame = []
        for u in pushed:
            halves = []
            for pts in (u.pts0, u.pts1):
                b = pts[0]
                moved = [OrbifoldPoint(b.chart, bexp(
                    space, b.position,
                    (1.0 - float(s)) * blog(space, b.position,
                                            _witness_pair(model, b.position,
                                                          x.position)[2])))
                    for x in pts]
                halves.append(moved)
            frame.append(UnderlyingCycle(model, u.ts0, u.ts1,
                                         halves[0], halves[1]))
        frames.append(frame)
        times.append(1.0 + float(s))
    shrunk = frames[-1]
    # stage 3: slide the constant cycles to q, avoiding p
    for s in grid1[1:]:
        frame = []
        for u in shrunk:
            halves = []
            for pts in (u.pts0, u.pts1):
                b = pts[0]
                d, bl, ql = _witness_pair(model, b.position, q)
                target = bexp(space, bl, float(s) * blog(space, bl, ql))
                halves.append([OrbifoldPoint(b.chart, target)] * len(pts))
            frame.append(UnderlyingCycle(model, u.ts0, u.ts1,
                                         halves[0], halves[1]))
        frames.append(frame)
        times.append(2.0 + float(s))
    # diagnostics
    min_dist = np.inf
    for frame in frames[len(grid1) - 1:]:
        for u in frame:
            for x in u.pts0 + u.pts1:
                min_dist = min(min_dist, dist_to_p(x.position))
    final = frames[-1]
    final_constant = all("constant" in u.type_flags(1e-7) for u in final)
    return {
        "frames": frames,
        "times": np.array(times),
        "p": p,
        "q": q,
        "stripe_clearance": stripe_clear,
        "min_dist_to_p": float(min_dist),
        "final_constant": final_constant,
    }
