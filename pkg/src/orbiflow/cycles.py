"""Two-segment orbifold 1-cycles and their equivalence moves.

A cycle is a chain of geodesic arcs, each living inside one chart ball of
an orbifold model, with a junction motion (a germ of the model groupoid)
gluing consecutive arcs.  The parameter domain is [0,1] u [1,2]: segments
``0 .. n_half-1`` cover the first half, the rest the second.  Three kinds:

* ``TWO_LOOPS``     -- each half closes up on its own basepoint;
* ``SINGLE_LOOP``   -- one loop over [0,2], closing across the halves;
* ``FIGURE_EIGHT``  -- all four half-endpoints meet at one point.

Kind-defining endpoint identities are stored *literally*: the relevant
lifts agree in one chart (same chart id, same coordinates).  This keeps
the corner sums of the descent stage inside a single tangent space and
makes the loop splittings (figure-eight -> pair of loops / long loop) pure
re-tags of the same data.

All operations return new cycles; nothing here mutates shared state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .atlas import OrbifoldModel, OrbifoldPoint
from .errors import (CycleError, EndpointMismatch, GermChainBroken,
                     GermNotApplicable, JunctionMismatch, LipschitzExceeded,
                     NotFigure8, SingularJunction)
from .geometry import apply_motion_points, apply_motion_vectors, bdist, bexp, \
    blog, btransport, motion_inverse


class CycleKind(enum.Enum):
    TWO_LOOPS = "two_loops"
    SINGLE_LOOP = "single_loop"
    FIGURE_EIGHT = "figure_eight"


_I3 = np.eye(3)


@dataclass(frozen=True)
class GCycle:
    model: OrbifoldModel
    kind: CycleKind
    n_half: int                 # segments [0, n_half) cover [0, 1]
    t: np.ndarray               # (m+1,) subdivision, t[0]=0, t[n_half]=1, t[m]=2
    start: np.ndarray           # (m, d) arc start points
    vel: np.ndarray             # (m, d) arc velocities per unit parameter
    chart: np.ndarray           # (m,) chart ids
    junc: np.ndarray            # (m-1, 3, 3); junc[j]: seg j+1 coords -> seg j

    # -- basic derived quantities -----------------------------------------

    @property
    def m(self) -> int:
        return len(self.start)

    @property
    def space(self):
        return self.model.space

    def widths(self) -> np.ndarray:
        return np.diff(self.t)

    def ends(self) -> np.ndarray:
        return bexp(self.space, self.start, self.widths()[:, None] * self.vel)

    def speeds(self) -> np.ndarray:
        return geo.norm(self.space, self.vel)

    def segment_lengths(self) -> np.ndarray:
        return self.speeds() * self.widths()

    def length(self) -> float:
        return float(np.sum(self.segment_lengths()))

    def max_speed(self) -> float:
        return float(np.max(self.speeds())) if self.m else 0.0

    def middle_junction(self) -> int:
        return self.n_half - 1

    def boundary_segments(self) -> Tuple[int, ...]:
        n, m = self.n_half, self.m
        return (0, n - 1, n, m - 1)

    def segment_index(self, t: float, half: int) -> int:
        """Positive-width segment of the given half containing t."""
        lo, hi = (0, self.n_half) if half == 0 else (self.n_half, self.m)
        best = None
        for i in range(lo, hi):
            if self.t[i] - 1e-12 <= t <= self.t[i + 1] + 1e-12:
                best = i
                if self.t[i + 1] - self.t[i] > 1e-14 and t <= self.t[i + 1]:
                    return i
        if best is None:
            raise CycleError(f"parameter {t} outside half {half}")
        return best

    def evaluate(self, t: float, half: int) -> OrbifoldPoint:
        i = self.segment_index(t, half)
        x = bexp(self.space, self.start[i], (t - self.t[i]) * self.vel[i])
        return OrbifoldPoint(int(self.chart[i]), x)

    def velocity_at(self, t: float, half: int) -> np.ndarray:
        i = self.segment_index(t, half)
        dt = t - self.t[i]
        return btransport(self.space, self.start[i], dt * self.vel[i], self.vel[i])

    # -- validation ---------------------------------------------------------

    def validate(self, lipschitz: Optional[float] = None,
                 chain_tol: Optional[float] = None,
                 match_tol: Optional[float] = None) -> "GCycle":
        model, space = self.model, self.space
        scale = max(1.0, space.scale)
        chain_tol = chain_tol if chain_tol is not None else \
            model.tol.germ_chain * scale
        match_tol = match_tol if match_tol is not None else \
            max(model.tol.tau_match(model.delta), chain_tol)
        if self.t[0] != 0.0 or abs(self.t[self.n_half] - 1.0) > 1e-12 \
                or abs(self.t[-1] - 2.0) > 1e-12:
            raise CycleError("subdivision must run 0..1..2")
        if np.any(np.diff(self.t) < -1e-14):
            raise CycleError("subdivision not sorted")
        ends = self.ends()
        mid = self.middle_junction()
        for j in range(self.m - 1):
            if j == mid and self.kind is not CycleKind.SINGLE_LOOP:
                continue
            img = apply_motion_points(space, self.junc[j], self.start[j + 1])
            if float(bdist(space, img, ends[j])) > chain_tol:
                raise GermChainBroken(f"junction {j} mismatch")
        self._check_boundary(ends, match_tol)
        if lipschitz is not None and self.max_speed() > lipschitz + 1e-9:
            raise LipschitzExceeded(
                f"max speed {self.max_speed():.4g} > {lipschitz:.4g}")
        for i in range(self.m):
            ch = model.charts[int(self.chart[i])]
            for x in (self.start[i], ends[i]):
                if float(bdist(space, x, ch.center)) > ch.radius + 1e-9 * scale:
                    raise CycleError(f"segment {i} leaves its chart ball")
        return self

    def _check_boundary(self, ends, tol):
        n, m = self.n_half, self.m
        k = self.kind
        pairs = []
        if k is CycleKind.TWO_LOOPS:
            pairs = [((0, self.start[0]), (n - 1, ends[n - 1])),
                     ((n, self.start[n]), (m - 1, ends[m - 1]))]
        elif k is CycleKind.SINGLE_LOOP:
            pairs = [((0, self.start[0]), (m - 1, ends[m - 1])),
                     ((n - 1, ends[n - 1]), (n, self.start[n]))]
        else:
            base = (0, self.start[0])
            pairs = [(base, (n - 1, ends[n - 1])), (base, (n, self.start[n])),
                     (base, (m - 1, ends[m - 1]))]
        for (i, xi), (j, xj) in pairs:
            if self.chart[i] != self.chart[j] \
                    or float(bdist(self.space, xi, xj)) > tol:
                raise EndpointMismatch(
                    f"{k.value}: boundary lifts of segments {i}/{j} disagree")

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n_half": self.n_half,
            "subdivision": self.t.tolist(),
            "segments": [{
                "chart": int(self.chart[i]),
                "start": self.start[i].tolist(),
                "velocity": self.vel[i].tolist(),
                "interval": [float(self.t[i]), float(self.t[i + 1])],
            } for i in range(self.m)],
            "germs": [g.tolist() for g in self.junc],
        }

    @staticmethod
    def from_dict(model: OrbifoldModel, d: dict) -> "GCycle":
        segs = d["segments"]
        return GCycle(model, CycleKind(d["kind"]), int(d["n_half"]),
                      np.array(d["subdivision"], dtype=float),
                      np.array([s["start"] for s in segs], dtype=float),
                      np.array([s["velocity"] for s in segs], dtype=float),
                      np.array([s["chart"] for s in segs], dtype=int),
                      np.array(d["germs"], dtype=float).reshape(-1, 3, 3))


@dataclass(frozen=True)
class OrderedCycle:
    """A cycle together with a sorted breakpoint list.

    The cycle must be geodesic away from the breakpoints; break values may
    repeat (multiplicity).  ``aligned`` cycles have exactly one segment per
    consecutive breakpoint pair, which is what the descent stage consumes.
    """

    cycle: GCycle
    breaks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        if np.any(np.diff(b) < -1e-12):
            raise CycleError("breakpoints not sorted")
        object.__setattr__(self, "breaks", b)

    @property
    def breaks_per_half(self) -> int:
        return int(np.searchsorted(self.breaks, 1.0, side="right"))

    def length(self) -> float:
        return self.cycle.length()

    def is_aligned(self) -> bool:
        return len(self.breaks) == self.cycle.m and \
            bool(np.max(np.abs(self.cycle.t[1:] - self.breaks)) < 1e-12)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _resample_polyline(model, chart_id, pts, max_len):
    """Geodesic pieces through consecutive polyline points, each <= max_len."""
    space = model.space
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        d = float(bdist(space, a, b))
        k = max(1, int(np.ceil(d / max_len)))
        v = blog(space, a, b)
        for j in range(k):
            s0 = bexp(space, a, (j / k) * v)
            s1 = bexp(space, a, ((j + 1) / k) * v)
            out.append((s0, s1))
    return out


def make_cycle(model: OrbifoldModel, kind: CycleKind,
               segments: Sequence[Tuple[int, np.ndarray]],
               germs: Optional[Sequence[np.ndarray]] = None,
               n_half: Optional[int] = None,
               breakpoints: Optional[np.ndarray] = None,
               lipschitz: Optional[float] = None) -> OrderedCycle:
    """Validated ordered cycle from per-chart polylines.

    ``segments``: list of (chart_id, points) where points is a (k, d) array
    sampled along the segment (two rows = a single geodesic piece).
    Polyline input is resampled into geodesic pieces of length <= delta/4.
    ``germs``: one motion matrix per junction between input segments
    (identity when omitted); junctions at the half boundary and the wrap
    follow the kind rules instead.
    ``n_half``: how many input segments form the first half (default: half).
    Parameter values are assigned per half proportionally to arc length
    unless explicit ``breakpoints`` are supplied for the pieces.
    """
    space = model.space
    if n_half is None:
        if len(segments) % 2:
            raise CycleError("give n_half for an odd segment split")
        n_half = len(segments) // 2
    if germs is None:
        germs = [np.eye(3)] * (len(segments) - 1)
    max_len = model.delta / 4.0
    pieces = []      # (chart, a, b)
    piece_junc = []  # motion to previous piece
    piece_half = []
    for si, (chart_id, pts) in enumerate(segments):
        pts = np.asarray(pts, dtype=float)
        sub = _resample_polyline(model, chart_id, pts, max_len)
        for k, (a, b) in enumerate(sub):
            if pieces:
                if k == 0:
                    g = np.asarray(germs[si - 1], dtype=float) if si > 0 else _I3
                else:
                    g = _I3
                piece_junc.append(g if not (k == 0 and si == 0) else _I3)
            pieces.append((chart_id, a, b))
            piece_half.append(0 if si < n_half else 1)
    n_pieces_half0 = sum(1 for h in piece_half if h == 0)
    lens = np.array([float(bdist(space, a, b)) for _, a, b in pieces])
    if breakpoints is not None:
        tvals = np.concatenate([[0.0], np.asarray(breakpoints, dtype=float)])
        if len(tvals) != len(pieces) + 1:
            raise CycleError("breakpoints must give one value per piece")
    else:
        tvals = np.zeros(len(pieces) + 1)
        for half, (lo, hi, t0, t1) in enumerate(
                [(0, n_pieces_half0, 0.0, 1.0),
                 (n_pieces_half0, len(pieces), 1.0, 2.0)]):
            seg = lens[lo:hi]
            tot = float(seg.sum())
            cum = np.cumsum(seg) / tot if tot > 0 else \
                np.arange(1, len(seg) + 1) / max(len(seg), 1)
            tvals[lo + 1:hi + 1] = t0 + (t1 - t0) * cum
        tvals[n_pieces_half0] = 1.0
        tvals[-1] = 2.0
    widths = np.diff(tvals)
    starts = np.stack([a for _, a, _ in pieces])
    vels = np.zeros_like(starts)
    for i, (_, a, b) in enumerate(pieces):
        if widths[i] > 1e-14:
            vels[i] = blog(space, a, b) / widths[i]
        elif float(bdist(space, a, b)) > 1e-12:
            raise CycleError("zero-width piece with distinct endpoints")
    cyc = GCycle(model, kind, n_pieces_half0, tvals, starts, vels,
                 np.array([c for c, _, _ in pieces], dtype=int),
                 np.stack(piece_junc) if piece_junc else np.zeros((0, 3, 3)))
    cyc = _canonicalize_boundary(cyc)
    cyc.validate(lipschitz=lipschitz)
    if breakpoints is None:
        br = cyc.t[1:].copy()
    else:
        br = np.asarray(breakpoints, dtype=float)
    return OrderedCycle(cyc, br)


def _canonicalize_boundary(c: GCycle) -> GCycle:
    """Force the kind-defining endpoint identities to hold literally.

    Orbit-equal but non-literal boundary lifts at regular points are fixed
    by moving segment runs with the unique connecting germ; at singular
    points a non-literal input is ambiguous and rejected.  Each fix moves a
    run touching exactly one boundary lift (suffix or prefix of a half), so
    earlier fixes are never undone; one-segment halves are split first.
    """
    model, space = c.model, c.space
    scale = max(1.0, space.scale)
    lit_tol = max(model.tol.tau_match(model.delta), model.tol.germ_chain * scale)
    orbit_tol = 1e4 * lit_tol

    def lift(c, which):
        """(chart, position, segment) of a boundary lift tag."""
        ends = c.ends()
        n, m = c.n_half, c.m
        return {
            "start0": (int(c.chart[0]), c.start[0], 0),
            "end_half0": (int(c.chart[n - 1]), ends[n - 1], n - 1),
            "start_half1": (int(c.chart[n]), c.start[n], n),
            "end1": (int(c.chart[m - 1]), ends[m - 1], m - 1),
        }[which]

    def fix(c, anchor_tag, probe_tag, run_of):
        a_chart, a_pos, _ = lift(c, anchor_tag)
        p_chart, p_pos, p_seg = lift(c, probe_tag)
        if p_chart == a_chart and float(bdist(space, p_pos, a_pos)) <= lit_tol:
            return c
        dq = model.quotient_distance(OrbifoldPoint(a_chart, a_pos),
                                     OrbifoldPoint(p_chart, p_pos))
        if dq > orbit_tol:
            raise EndpointMismatch(
                f"boundary points differ by {dq:.3g} in the quotient")
        if model.singular_distance(a_pos) < orbit_tol:
            raise EndpointMismatch(
                "non-literal boundary match at a singular point is ambiguous")
        if run_of(c) is None:  # need a split so the run avoids the anchored lift
            if probe_tag == "end_half0":
                mid = 0.5 * (c.t[0] + c.t[c.n_half])
            else:
                mid = 0.5 * (c.t[c.n_half] + c.t[c.m])
            c = refine_subdivision(c, float(mid))
        for _ in range(8):
            _, p_pos, p_seg = lift(c, probe_tag)
            img = apply_motion_points(space, model.group, p_pos)
            k = int(np.argmin(bdist(space, img, a_pos)))
            try:
                return move_segments(c, list(run_of(c)), model.group[k],
                                     force_host={p_seg: a_chart})
            except GermNotApplicable:
                # the probe segment does not fit the anchor chart; shave a
                # shorter stub off it next to the junction and retry
                lo, hi = float(c.t[p_seg]), float(c.t[p_seg + 1])
                if hi - lo < 1e-12:
                    break
                if probe_tag in ("end_half0", "end1"):
                    tau = hi - 0.25 * (hi - lo)
                else:
                    tau = lo + 0.25 * (hi - lo)
                c = refine_subdivision(c, tau)
        raise EndpointMismatch(
            f"cannot host the {probe_tag} boundary stub in the anchor chart")

    def half0_suffix(c):
        return range(1, c.n_half) if c.n_half > 1 else None

    def half1_all(c):
        return range(c.n_half, c.m)

    def half1_suffix(c):
        return range(c.n_half + 1, c.m) if c.m - c.n_half > 1 else None

    if c.kind is CycleKind.TWO_LOOPS:
        c = fix(c, "start0", "end_half0", half0_suffix)
        c = fix(c, "start_half1", "end1", half1_suffix)
    elif c.kind is CycleKind.SINGLE_LOOP:
        c = fix(c, "start0", "end1", half1_all)
        c = fix(c, "end_half0", "start_half1",
                lambda cc: range(cc.n_half, cc.m - 1)
                if cc.m - cc.n_half > 1 else None)
        junc = c.junc.copy()
        junc[c.middle_junction()] = _I3
        c = replace(c, junc=junc)
    else:
        c = fix(c, "start0", "end_half0", half0_suffix)
        c = fix(c, "start0", "start_half1", half1_all)
        c = fix(c, "start0", "end1", half1_suffix)
    return c


# ---------------------------------------------------------------------------
# equivalence moves
# ---------------------------------------------------------------------------

def _host_moved_arc(model, motion, chart_id, a, b):
    """Chart hosting the motion image of the arc (a, b); None if none does."""
    space = model.space
    mots, tgts = model.germs_from(chart_id)
    fp = apply_motion_points(space, mots, a)
    ia = apply_motion_points(space, motion, a)
    ib = apply_motion_points(space, motion, b)
    same = bdist(space, fp, ia) < 1e-8 * max(1.0, space.scale)
    best, best_margin = None, -np.inf
    for k in np.nonzero(same)[0]:
        ch = model.charts[int(tgts[k])]
        mar = ch.radius - max(float(bdist(space, ia, ch.center)),
                              float(bdist(space, ib, ch.center)))
        if mar > best_margin:
            best, best_margin = int(tgts[k]), mar
    if best is None or best_margin < 0:
        return None
    return best


def _arc_fits(model, chart_id, a, b, slack=1e-9):
    ch = model.charts[int(chart_id)]
    space = model.space
    return max(float(bdist(space, a, ch.center)),
               float(bdist(space, b, ch.center))) <= ch.radius + slack * \
        max(1.0, space.scale)


def move_segments(c: GCycle, seg_set: Sequence[int], motion: np.ndarray,
                  rigid: Sequence[int] = (),
                  force_host: Optional[dict] = None) -> GCycle:
    """Apply one groupoid motion to a set of segments, conjugating junctions.

    Each moved segment may pick up an extra chart-hosting motion (a fold
    into a chart deep enough to hold it); segments listed in ``rigid``
    share one correction *and one host chart* so literal endpoint
    identities between them survive.  ``force_host`` pins chosen segments
    to a specific chart (the moved arc must fit there).  Total per-segment
    motions M_s enter the junctions as junc[j] <- M_j junc[j] M_{j+1}^-1.
    """
    model, space = c.model, c.space
    motion = np.asarray(motion, dtype=float)
    S = sorted(set(int(s) for s in seg_set))
    rigid = [s for s in rigid if s in S]
    force_host = dict(force_host or {})
    ends = c.ends()
    lens = c.segment_lengths()
    M = {}
    host = {}
    if rigid:
        base = apply_motion_points(space, motion, c.start[rigid[0]])
        need = float(max(lens[s] for s in rigid))
        common = None
        forced = {force_host[s] for s in rigid if s in force_host}
        if len(forced) > 1:
            raise GermNotApplicable("rigid set forced into different charts")
        if forced:
            tgt = forced.pop()
            if all(_arc_fits(model, tgt, apply_motion_points(space, motion, c.start[s]),
                             apply_motion_points(space, motion, ends[s]))
                   for s in rigid):
                common = (tgt, motion)
        if common is None:
            # one chart must host the whole moved boundary fan
            for margin in (min(need, 0.98 * model.delta), 0.0):
                hosted = model.fold_to_chart(base, margin=margin)
                if hosted is None:
                    continue
                tgt, _, corr = hosted
                mm = corr @ motion
                if all(_arc_fits(model, tgt,
                                 apply_motion_points(space, mm, c.start[s]),
                                 apply_motion_points(space, mm, ends[s]))
                       for s in rigid):
                    common = (tgt, mm)
                    break
            if common is None:
                raise GermNotApplicable("no chart hosts the moved boundary fan")
        for s in rigid:
            host[s], M[s] = common
    for s in S:
        if s in M:
            continue
        if s in force_host:
            ia = apply_motion_points(space, motion, c.start[s])
            ib = apply_motion_points(space, motion, ends[s])
            if not _arc_fits(model, force_host[s], ia, ib):
                raise GermNotApplicable(
                    f"moved segment {s} does not fit chart {force_host[s]}")
            host[s], M[s] = int(force_host[s]), motion
            continue
        tgt = _host_moved_arc(model, motion, int(c.chart[s]),
                              c.start[s], ends[s])
        if tgt is None:
            hosted = model.fold_to_chart(
                apply_motion_points(space, motion, c.start[s]),
                margin=min(float(lens[s]), 0.98 * model.delta))
            if hosted is None:
                raise GermNotApplicable(f"no chart hosts moved segment {s}")
            tgt, _, corr = hosted
            host[s], M[s] = int(tgt), corr @ motion
        else:
            host[s], M[s] = int(tgt), motion
    start = c.start.copy()
    vel = c.vel.copy()
    chart = c.chart.copy()
    junc = c.junc.copy()
    for s in S:
        chart[s] = host[s]
        start[s] = apply_motion_points(space, M[s], c.start[s])
        vel[s] = apply_motion_vectors(space, M[s], c.vel[s])
    for j in range(c.m - 1):
        ml, mr = M.get(j), M.get(j + 1)
        if ml is None and mr is None:
            continue
        left = ml if ml is not None else _I3
        right = mr if mr is not None else _I3
        junc[j] = left @ junc[j] @ motion_inverse(space, right)
    return replace(c, start=start, vel=vel, chart=chart, junc=junc)


def transition_segment(c: GCycle, k: int, motion: np.ndarray) -> GCycle:
    """Move segment k by a groupoid motion (a germ along the segment).

    Boundary segments move in tandem with their junction partners so the
    literal endpoint identities survive: both segments of a loop closure,
    both sides of the long-loop middle point, or all four figure-eight
    boundary segments.
    """
    n, m = c.n_half, c.m
    if c.kind is CycleKind.FIGURE_EIGHT and k in (0, n - 1, n, m - 1):
        S = {0, n - 1, n, m - 1}
    elif c.kind is CycleKind.TWO_LOOPS and k in (0, n - 1):
        S = {0, n - 1}
    elif c.kind is CycleKind.TWO_LOOPS and k in (n, m - 1):
        S = {n, m - 1}
    elif c.kind is CycleKind.SINGLE_LOOP and k in (0, m - 1):
        S = {0, m - 1}
    elif c.kind is CycleKind.SINGLE_LOOP and k in (n - 1, n):
        S = {n - 1, n}
    else:
        S = {k}
    rigid = sorted(S) if len(S) > 1 else ()
    return move_segments(c, sorted(S), np.asarray(motion, dtype=float),
                         rigid=rigid)


def refine_subdivision(c: GCycle, tau: float, half: Optional[int] = None) -> GCycle:
    """Split the segment containing ``tau``, inserting an identity junction."""
    if half is None:
        half = 0 if tau <= 1.0 else 1
    if np.any(np.abs(c.t - tau) < 1e-13):
        return c                       # existing knot: no-op
    i = c.segment_index(tau, half)
    space = c.space
    mid = bexp(space, c.start[i], (tau - c.t[i]) * c.vel[i])
    vmid = btransport(space, c.start[i], (tau - c.t[i]) * c.vel[i], c.vel[i])
    t = np.insert(c.t, i + 1, tau)
    start = np.insert(c.start, i + 1, mid, axis=0)
    vel = np.insert(c.vel, i + 1, vmid, axis=0)
    chart = np.insert(c.chart, i + 1, c.chart[i])
    junc = np.insert(c.junc, i, _I3, axis=0)
    n_half = c.n_half + (1 if i < c.n_half else 0)
    return replace(c, n_half=n_half, t=t, start=start, vel=vel, chart=chart,
                   junc=junc)


def merge_knot(c: GCycle, j: int) -> GCycle:
    """Undo a subdivision at junction j (identity germ, same chart, smooth)."""
    if not (0 <= j < c.m - 1) or j == c.middle_junction():
        raise CycleError("cannot merge across the half boundary")
    if int(c.chart[j]) != int(c.chart[j + 1]) or \
            np.max(np.abs(c.junc[j] - _I3)) > 1e-10:
        raise CycleError("junction is not an identity splice")
    space = c.space
    w = c.t[j + 1] - c.t[j]
    vj = btransport(space, c.start[j], w * c.vel[j], c.vel[j])
    if float(geo.norm(space, vj - c.vel[j + 1])) > 1e-8 * max(1.0, c.speeds()[j], 1.0):
        raise CycleError("velocities do not continue smoothly")
    t = np.delete(c.t, j + 1)
    start = np.delete(c.start, j + 1, axis=0)
    vel = np.delete(c.vel, j + 1, axis=0)
    chart = np.delete(c.chart, j + 1)
    junc = np.delete(c.junc, j, axis=0)
    n_half = c.n_half - (1 if j + 1 < c.n_half else 0)
    return replace(c, n_half=n_half, t=t, start=start, vel=vel, chart=chart,
                   junc=junc)


# ---------------------------------------------------------------------------
# projections and splittings
# ---------------------------------------------------------------------------

@dataclass
class UnderlyingCycle:
    """Samplewise projection of a cycle to the quotient space."""

    model: OrbifoldModel
    ts0: np.ndarray          # sample times in [0, 1]
    ts1: np.ndarray          # sample times in [1, 2]
    pts0: List[OrbifoldPoint]
    pts1: List[OrbifoldPoint]

    def endpoint_gaps(self):
        q = self.model.quotient_distance
        c0, c1m = self.pts0[0], self.pts0[-1]
        c1p, c2 = self.pts1[0], self.pts1[-1]
        return {
            "loop0": q(c0, c1m), "loop1": q(c1p, c2),
            "long": max(q(c0, c2), q(c1m, c1p)),
            "wedge": max(q(c0, c1m), q(c0, c1p), q(c0, c2)),
        }

    def type_flags(self, tol: float) -> set:
        g = self.endpoint_gaps()
        flags = set()
        if g["loop0"] <= tol and g["loop1"] <= tol:
            flags.add("two_loops")
        if g["long"] <= tol:
            flags.add("single_loop")
        if g["wedge"] <= tol:
            flags.add("figure_eight")
        if self._constant(tol):
            flags.add("constant")
        return flags

    def _constant(self, tol) -> bool:
        q = self.model.quotient_distance
        return all(q(self.pts0[0], p) <= tol for p in self.pts0) and \
            all(q(self.pts1[-1], p) <= tol for p in self.pts1)


def project_underlying(c: GCycle, h_sample: float) -> UnderlyingCycle:
    ts0 = np.linspace(0.0, 1.0, max(2, int(np.ceil(1.0 / h_sample)) + 1))
    ts1 = ts0 + 1.0
    pts0 = [c.evaluate(float(t), 0) for t in ts0]
    pts1 = [c.evaluate(float(t), 1) for t in ts1]
    return UnderlyingCycle(c.model, ts0, ts1, pts0, pts1)


def pointwise_distance(a: GCycle, b: GCycle, n_samples: int = 64) -> float:
    """sup over parameters of the quotient distance between projections."""
    q = a.model.quotient_distance
    worst = 0.0
    for half, (t0, t1) in enumerate([(0.0, 1.0), (1.0, 2.0)]):
        for t in np.linspace(t0, t1, n_samples):
            worst = max(worst, q(a.evaluate(float(t), half),
                                 b.evaluate(float(t), half)))
    return worst


def split_figure8(c: GCycle, mode: str) -> GCycle:
    """Split a figure-eight into its two-loop (p1) or long-loop (p2) image.

    With literal boundary identities both images share the segment data;
    only the kind tag and the middle-junction bookkeeping change.
    """
    if c.kind is not CycleKind.FIGURE_EIGHT:
        raise NotFigure8("input cycle is not a figure eight")
    if mode == "p1":
        out = replace(c, kind=CycleKind.TWO_LOOPS)
    elif mode == "p2":
        junc = c.junc.copy()
        junc[c.middle_junction()] = _I3
        out = replace(c, kind=CycleKind.SINGLE_LOOP, junc=junc)
    else:
        raise ValueError("mode must be 'p1' or 'p2'")
    return out


def join_as_figure8(c: GCycle) -> GCycle:
    """Inverse splitting: re-tag a cycle whose four boundary lifts coincide.

    For a two-loop cycle this is the p1-preimage (well-defined when the two
    basepoints agree); for a long loop the p2-preimage (basepoint equal to
    the middle point).  Non-literal but orbit-equal data at a regular point
    is canonicalized first.
    """
    if c.kind is CycleKind.FIGURE_EIGHT:
        return c
    probe = replace(c, kind=CycleKind.FIGURE_EIGHT)
    probe = _canonicalize_boundary(probe)
    probe.validate()
    return probe


# ---------------------------------------------------------------------------
# orbifold paths and concatenation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GPath:
    """Open chain of chart arcs with junction motions (a free orbifold path)."""

    model: OrbifoldModel
    t: np.ndarray
    start: np.ndarray
    vel: np.ndarray
    chart: np.ndarray
    junc: np.ndarray

    @property
    def m(self) -> int:
        return len(self.start)

    @property
    def space(self):
        return self.model.space

    def ends(self) -> np.ndarray:
        return bexp(self.space, self.start,
                    np.diff(self.t)[:, None] * self.vel)

    def length(self) -> float:
        return float(np.sum(geo.norm(self.space, self.vel) * np.diff(self.t)))

    def initial_point(self) -> OrbifoldPoint:
        return OrbifoldPoint(int(self.chart[0]), self.start[0])

    def terminal_point(self) -> OrbifoldPoint:
        return OrbifoldPoint(int(self.chart[-1]), self.ends()[-1])

    def reparametrized(self, a: float, b: float) -> "GPath":
        """Affine change of parameter onto [a, b]."""
        t0, t1 = self.t[0], self.t[-1]
        s = (b - a) / (t1 - t0)
        t = a + (self.t - t0) * s
        return replace(self, t=t, vel=self.vel / s)

    def reversed(self) -> "GPath":
        space = self.space
        ends = self.ends()
        w = np.diff(self.t)
        t0, t1 = self.t[0], self.t[-1]
        t = (t0 + t1 - self.t)[::-1]
        start = ends[::-1].copy()
        vel = np.stack([
            -btransport(space, self.start[i], w[i] * self.vel[i], self.vel[i])
            for i in range(self.m)])[::-1]
        junc = np.stack([motion_inverse(space, g) for g in self.junc])[::-1] \
            if self.m > 1 else self.junc
        return replace(self, t=t, start=start, vel=vel,
                       chart=self.chart[::-1].copy(), junc=junc)

    def point_at(self, t: float) -> np.ndarray:
        i = int(np.clip(np.searchsorted(self.t, t, side="right") - 1,
                        0, self.m - 1))
        return bexp(self.space, self.start[i], (t - self.t[i]) * self.vel[i])

    def restrict(self, a: float, b: float) -> "GPath":
        """The sub-path over [a, b] (degenerate when a == b)."""
        space = self.space
        if b < a:
            raise CycleError("restrict needs a <= b")
        if b - a < 1e-15:
            x = self.point_at(a)
            i = int(np.clip(np.searchsorted(self.t, a, side="right") - 1,
                            0, self.m - 1))
            return GPath(self.model, np.array([a, a]), x[None],
                         np.zeros((1, len(x))),
                         np.array([self.chart[i]]), np.zeros((0, 3, 3)))
        ts, starts, vels, charts, juncs = [], [], [], [], []
        for i in range(self.m):
            lo, hi = max(float(self.t[i]), a), min(float(self.t[i + 1]), b)
            if hi - lo < 1e-15:
                continue
            x = bexp(space, self.start[i], (lo - self.t[i]) * self.vel[i])
            v = btransport(space, self.start[i],
                           (lo - self.t[i]) * self.vel[i], self.vel[i])
            if starts:
                g = _I3
                for jj in range(prev, i):
                    g = g @ self.junc[jj]
                juncs.append(g)
            ts.append(lo)
            starts.append(x)
            vels.append(v)
            charts.append(int(self.chart[i]))
            prev = i
        ts.append(min(float(self.t[prev + 1]), b))
        return GPath(self.model, np.array(ts), np.stack(starts),
                     np.stack(vels), np.array(charts, dtype=int),
                     np.stack(juncs) if juncs else np.zeros((0, 3, 3)))


def path_from_arc(model, chart_id: int, a, b, interval=(0.0, 1.0),
                  max_len: Optional[float] = None) -> GPath:
    """Single-chart geodesic path, split into pieces of length <= max_len."""
    space = model.space
    max_len = max_len or model.delta / 4.0
    pieces = _resample_polyline(model, chart_id, np.stack([a, b]), max_len)
    k = len(pieces)
    t = np.linspace(interval[0], interval[1], k + 1)
    start = np.stack([p[0] for p in pieces])
    w = np.diff(t)
    vel = np.stack([blog(space, p[0], p[1]) / w[i]
                    for i, p in enumerate(pieces)])
    return GPath(model, t, start, vel,
                 np.full(k, chart_id, dtype=int),
                 np.broadcast_to(_I3, (k - 1, 3, 3)).copy() if k > 1
                 else np.zeros((0, 3, 3)))


def concatenate(a: GPath, b: GPath) -> GPath:
    """Join two paths at a shared regular point.

    The junction motion is the unique germ carrying b's initial lift onto
    a's terminal lift; a singular junction is rejected because that germ
    would not be unique.
    """
    model = a.model
    space = model.space
    pa, pb = a.terminal_point(), b.initial_point()
    tau = 100 * model.tol.tau_match(model.delta)
    if model.quotient_distance(pa, pb) > tau:
        raise JunctionMismatch("paths do not meet in the quotient")
    order, _ = model.local_group(pa)
    if order > 1:
        raise SingularJunction("cannot concatenate across a singular point")
    img = apply_motion_points(space, model.group, pb.position)
    k = int(np.argmin(bdist(space, img, pa.position)))
    motion = model.group[k]
    b = replace(b, t=b.t - b.t[0] + a.t[-1])
    bm = _move_path(b, motion)
    # junction motion: carries bm's (possibly chart-folded) initial lift
    # onto a's terminal lift
    img2 = apply_motion_points(space, model.group, bm.start[0])
    k2 = int(np.argmin(bdist(space, img2, pa.position)))
    if float(bdist(space, img2[k2], pa.position)) > tau:
        raise JunctionMismatch("junction lift could not be matched")
    junc = np.concatenate([a.junc, [model.group[k2]], bm.junc], axis=0)
    return GPath(model, np.concatenate([a.t, bm.t[1:]]),
                 np.concatenate([a.start, bm.start]),
                 np.concatenate([a.vel, bm.vel]),
                 np.concatenate([a.chart, bm.chart]),
                 junc)


def _move_path(p: GPath, motion: np.ndarray) -> GPath:
    """Move a whole path by one motion, folding segments into host charts."""
    model, space = p.model, p.space
    ends = p.ends()
    w = np.diff(p.t)
    lens = geo.norm(space, p.vel) * w
    chart = p.chart.copy()
    start = p.start.copy()
    vel = p.vel.copy()
    M = []
    for s in range(p.m):
        ms = motion
        tgt = _host_moved_arc(model, ms, int(p.chart[s]), p.start[s], ends[s])
        if tgt is None:
            hosted = model.fold_to_chart(
                apply_motion_points(space, ms, p.start[s]),
                margin=min(float(lens[s]), model.delta))
            if hosted is None:
                raise GermNotApplicable(f"no chart hosts moved path segment {s}")
            tgt, _, corr = hosted
            ms = corr @ ms
        M.append(ms)
        chart[s] = tgt
        start[s] = apply_motion_points(space, ms, p.start[s])
        vel[s] = apply_motion_vectors(space, ms, p.vel[s])
    junc = p.junc.copy()
    for j in range(p.m - 1):
        junc[j] = M[j] @ p.junc[j] @ motion_inverse(space, M[j + 1])
    return replace(p, start=start, vel=vel, chart=chart, junc=junc)


def loop_from_paths(model, paths: Sequence[GPath], domain=(0.0, 1.0)) -> GPath:
    """Concatenate paths into a closed chain over the given domain."""
    out = paths[0]
    for p in paths[1:]:
        out = concatenate(out, p)
    return out.reparametrized(*domain)


def cycle_from_halves(model, half0: GPath, half1: GPath,
                      kind: CycleKind) -> GCycle:
    """Assemble a cycle from two half-paths over [0,1] and [1,2].

    The halves must already satisfy the kind's endpoint identities up to
    orbit equality; literal matching is restored canonically.
    """
    h0 = half0.reparametrized(0.0, 1.0)
    h1 = half1.reparametrized(1.0, 2.0)
    c = GCycle(model, kind, h0.m,
               np.concatenate([h0.t, h1.t[1:]]),
               np.concatenate([h0.start, h1.start]),
               np.concatenate([h0.vel, h1.vel]),
               np.concatenate([h0.chart, h1.chart]),
               np.concatenate([h0.junc, [_I3], h1.junc], axis=0))
    c = _canonicalize_boundary(c)
    return c.validate()


# ---------------------------------------------------------------------------
# separability (non-Hausdorff witnesses)
# ---------------------------------------------------------------------------

def separability(a: OrderedCycle, b: OrderedCycle, tol: Optional[float] = None,
                 n_samples: int = 48) -> str:
    """Classify the topological relation of two cycles.

    Returns one of 'equal', 'inseparable_p1', 'inseparable_p2', 'separated'.
    A figure-eight cannot be separated from its splittings; two distinct
    figure-eights sharing a splitting image are likewise inseparable.
    """
    ca, cb = a.cycle, b.cycle
    model = ca.model
    tol = tol if tol is not None else \
        max(1e3 * model.tol.tau_match(model.delta), 1e-7)

    def close(x, y):
        return pointwise_distance(x, y, n_samples) <= tol

    if ca.kind == cb.kind and close(ca, cb):
        return "equal"
    ka, kb = ca.kind, cb.kind
    f8 = CycleKind.FIGURE_EIGHT
    if ka is f8 and kb is f8:
        if close(split_figure8(ca, "p1"), split_figure8(cb, "p1")):
            return "inseparable_p1"
        if close(split_figure8(ca, "p2"), split_figure8(cb, "p2")):
            return "inseparable_p2"
        return "separated"
    if ka is f8 or kb is f8:
        f, other = (ca, cb) if ka is f8 else (cb, ca)
        if other.kind is CycleKind.TWO_LOOPS and close(split_figure8(f, "p1"), other):
            return "inseparable_p1"
        if other.kind is CycleKind.SINGLE_LOOP and close(split_figure8(f, "p2"), other):
            return "inseparable_p2"
    return "separated"


# ---------------------------------------------------------------------------
# misc helpers used by the drivers
# ---------------------------------------------------------------------------

def constant_cycle(model: OrbifoldModel, p: OrbifoldPoint,
                   kind: CycleKind = CycleKind.TWO_LOOPS,
                   n_per_half: int = 1) -> OrderedCycle:
    d = model.space.dim
    m = 2 * n_per_half
    t = np.concatenate([np.linspace(0, 1, n_per_half + 1),
                        np.linspace(1, 2, n_per_half + 1)[1:]])
    start = np.tile(p.position, (m, 1))
    vel = np.zeros((m, d))
    chart = np.full(m, p.chart, dtype=int)
    junc = np.broadcast_to(_I3, (m - 1, 3, 3)).copy()
    c = GCycle(model, kind, n_per_half, t, start, vel, chart, junc)
    return OrderedCycle(c.validate(), t[1:].copy())


def energy(c: GCycle) -> float:
    """Sum of segmentwise speed-squared integrals (diagnostic functional)."""
    return float(np.sum(c.speeds() ** 2 * c.widths()))
