"""Sweepout construction and the systole-diameter experiment.

The five-stage family: contract two triangle faces backwards into a
figure-eight wedge (stage 1), open the backtracked edge into a long loop
(stage 2), rebase the loop from one triangle vertex to the base vertex
through six reparametrization legs (stage 3), close a backtrack on the
opposite side (stage 4), and contract the remaining two faces forward
(stage 5).  Every sample is bounded by four diameters plus two mesh
widths; driving the family through the shortening driver either collapses
every sample (no geodesic below the budget obstructs) or detects a
geodesic by stabilizing at one (min-max detection).

The independent oracle for shortest closed geodesics enumerates the
model's deck transformations: rotation angles on the sphere quotients,
translation (and order-2 bounce) lengths on flat doubled polygons, and
hyperbolic translation lengths in the negatively curved case.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .atlas import OrbifoldModel, OrbifoldPoint
from .config import DriverConfig, make_driver_config
from .cycles import (CycleKind, GCycle, GPath, OrderedCycle,
                     cycle_from_halves, split_figure8)
from .deformation import (FamilyTrace, ShortenState, ShorteningTrace,
                          deform_family, shorten)
from .descent import stability_test
from .errors import (MaxItersExceeded, OracleInconclusive, StageJoinMismatch,
                     TriangulationFailed)
from .geometry import bdist, bexp, blog, motion_inverse

_I3 = np.eye(3)


# ---------------------------------------------------------------------------
# geodesic paths on the quotient
# ---------------------------------------------------------------------------

def geodesic_path(model: OrbifoldModel, a: OrbifoldPoint, b: OrbifoldPoint,
                  pieces_per_delta: float = 4.0) -> GPath:
    """Minimizing quotient path from a to b as a chart-hosted chain.

    The witness is a single model-space geodesic from a lift of ``a`` to
    the nearest group image of ``b``; it is chopped into pieces no longer
    than delta / pieces_per_delta and每 each piece is folded into a chart.
    """
    space = model.space
    d, pa, pb = model.quotient_distance_witness(a, b)
    max_len = model.delta / pieces_per_delta
    k = max(1, int(np.ceil(d / max_len)))
    v = blog(space, pa, pb)
    pts = np.stack([bexp(space, pa, (i / k) * v) for i in range(k + 1)])
    starts, vels, charts, juncs = [], [], [], []
    t = np.linspace(0.0, 1.0, k + 1)
    prev_host = None
    for i in range(k):
        ell = float(bdist(space, pts[i], pts[i + 1]))
        hosted = model.fold_to_chart(pts[i], margin=min(ell, 0.9 * model.delta))
        if hosted is None:
            raise TriangulationFailed("edge piece escapes the chart cover")
        cid, img, mot = hosted
        starts.append(img)
        w = t[i + 1] - t[i]
        vels.append(geo.apply_motion_vectors(space, mot, v / k) / w)
        charts.append(cid)
        if prev_host is not None:
            juncs.append(prev_host @ motion_inverse(space, mot))
        prev_host = mot
    return GPath(model, t, np.stack(starts), np.stack(vels),
                 np.array(charts, dtype=int),
                 np.stack(juncs) if juncs else np.zeros((0, 3, 3)))


def path_min_singular_distance(model, path: GPath, samples: int = 64) -> float:
    best = np.inf
    if not model.singular_points:
        return best
    for t in np.linspace(path.t[0], path.t[-1], samples):
        best = min(best, model.singular_distance(path.point_at(float(t))))
    return best


# ---------------------------------------------------------------------------
# triangulation
# ---------------------------------------------------------------------------

@dataclass
class Triangulation:
    model: OrbifoldModel
    vertices: List[OrbifoldPoint]
    edges: Dict[Tuple[int, int], float]       # (i, j) -> length
    triangles: List[Tuple[int, int, int]]
    base_vertex: int
    selected: Tuple[int, int, int]
    max_edge: float
    singular_clearance: float

    def edge_path(self, i: int, j: int) -> GPath:
        if (i, j) in self._paths:
            return self._paths[(i, j)]
        if (j, i) in self._paths:
            p = self._paths[(j, i)].reversed()
            self._paths[(i, j)] = p
            return p
        p = geodesic_path(self.model, self.vertices[i], self.vertices[j])
        self._paths[(i, j)] = p
        return p

    _paths: dict = field(default_factory=dict)


def triangulate(model: OrbifoldModel, delta_tri: Optional[float] = None,
                min_singular: float = 1e-3,
                rng: Optional[np.random.Generator] = None) -> Triangulation:
    """Regular-vertex net with minimizing-geodesic edges of length <= delta_tri.

    Vertices are farthest-point samples of the region net staying clear of
    the cone points; edges join pairs within delta_tri; triangles are the
    mutually joined triples.  The base vertex is the first sample and the
    selected triangle maximizes its distance from the base vertex.
    """
    delta_tri = delta_tri if delta_tri is not None else model.delta / 2
    if delta_tri >= model.delta:
        raise TriangulationFailed("delta_tri must stay below the cover margin")
    rng = rng or np.random.default_rng(0)
    xs = model.region_samples()
    ok = [x for x in xs if model.singular_distance(x) > max(min_singular,
                                                            delta_tri / 10)]
    if len(ok) < 8:
        raise TriangulationFailed("resolution too coarse near the cone points")
    # farthest point sampling at spacing ~ delta_tri / 2
    pts: List[np.ndarray] = [ok[int(rng.integers(len(ok)))]]

    def qd(x, y):
        return model.quotient_distance(OrbifoldPoint(0, x), OrbifoldPoint(0, y))

    dists = np.array([qd(x, pts[0]) for x in ok])
    while True:
        i = int(np.argmax(dists))
        if dists[i] < delta_tri / 2:
            break
        pts.append(ok[i])
        dists = np.minimum(dists, np.array([qd(x, ok[i]) for x in ok]))
        if len(pts) > 600:
            break
    vertices = []
    for x in pts:
        hosted = model.fold_to_chart(x)
        vertices.append(OrbifoldPoint(hosted[0], hosted[1]))
    n = len(vertices)
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            d = model.quotient_distance(vertices[i], vertices[j])
            if d <= delta_tri + 1e-12:
                edges[(i, j)] = d
                edges[(j, i)] = d
    adj = {i: set() for i in range(n)}
    for (i, j) in edges:
        adj[i].add(j)
    triangles = []
    for i in range(n):
        for j in adj[i]:
            if j <= i:
                continue
            for k in adj[i] & adj[j]:
                if k > j:
                    triangles.append((i, j, k))
    if not triangles:
        raise TriangulationFailed("no triangles at this mesh width")
    base = 0
    far = {i: model.quotient_distance(vertices[base], vertices[i])
           for i in range(n)}
    selected = max(triangles, key=lambda t: min(far[v] for v in t))
    tri = Triangulation(model, vertices, edges, triangles, base, selected,
                        max(d for d in edges.values()), np.inf)
    # clearance of the six needed edges from the singular set
    clear = np.inf
    v0, (v1, v2, v3) = base, selected
    for (a, b) in [(v0, v1), (v0, v2), (v0, v3), (v1, v2), (v2, v3), (v3, v1)]:
        clear = min(clear, path_min_singular_distance(model, tri.edge_path(a, b)))
    tri.singular_clearance = clear
    return tri


def lift_curve(model: OrbifoldModel, samples: Sequence[OrbifoldPoint],
               gap_cap: Optional[float] = None) -> GPath:
    """Unique chart-hosted path through regular quotient samples.

    Consecutive samples are joined by minimizing arcs; the connecting germ
    at each junction is forced by regularity.  Samples at singular points
    or further apart than half the covering margin are rejected.
    """
    from .cycles import concatenate, path_from_arc
    from .errors import CycleError
    gap_cap = gap_cap if gap_cap is not None else model.delta / 2
    tau = 100 * model.tol.tau_match(model.delta)
    pieces = []
    for a, b in zip(samples[:-1], samples[1:]):
        if model.singular_distance(a.position) < tau or \
                model.singular_distance(b.position) < tau:
            raise CycleError("lift requires samples on the principal stratum")
        d = model.quotient_distance(a, b)
        if d > gap_cap:
            raise CycleError(f"sample gap {d:.3g} exceeds half the margin")
        pieces.append(geodesic_path(model, a, b))
    out = pieces[0]
    for p in pieces[1:]:
        out = concatenate(out, p)
    return out.reparametrized(0.0, 1.0)


# ---------------------------------------------------------------------------
# sweepout family
# ---------------------------------------------------------------------------

@dataclass
class SweepoutFamily:
    model: OrbifoldModel
    grid: np.ndarray
    samples: List[OrderedCycle]
    kinds: List[str]
    max_length: float
    tri: Triangulation
    diameter_upper: float
    delta_tri: float

    def length_bound(self) -> float:
        return 4 * self.diameter_upper + 2 * self.delta_tri


def _collapse_frames(model, oc: OrderedCycle, n_frames: int) -> List[GCycle]:
    """Exact in-chart collapse of a tiny cycle onto its basepoint lift(s).

    Works in normal coordinates at each half's basepoint; valid once the
    loop fits well inside one chart ball (length below the cover margin).
    """
    space = model.space
    c = oc.cycle
    frames = []
    for s in np.linspace(1.0, 0.0, n_frames + 1)[1:]:
        start = c.start.copy()
        vel = c.vel.copy()
        for lo, hi, bidx in ((0, c.n_half, 0), (c.n_half, c.m, c.n_half)):
            b = c.start[bidx]
            for i in range(lo, hi):
                w = blog(space, b, c.start[i])
                start[i] = bexp(space, b, s * w)
                vel[i] = s * geo.btransport(space, b, s * w,
                                            geo.project_to_tangent(space, b,
                                                                   vel[i] * 0 + c.vel[i]))
        # rebuild velocities from scaled endpoints so arcs stay minimizing
        ends = bexp(space, c.start, np.diff(c.t)[:, None] * c.vel)
        widths = np.diff(c.t)
        for lo, hi, bidx in ((0, c.n_half, 0), (c.n_half, c.m, c.n_half)):
            b = c.start[bidx]
            for i in range(lo, hi):
                e_sc = bexp(space, b, s * blog(space, b, ends[i]))
                if widths[i] > 1e-15:
                    vel[i] = blog(space, start[i], e_sc) / widths[i]
                else:
                    vel[i] = 0 * vel[i]
        from dataclasses import replace as drep
        frames.append(drep(c, start=start, vel=vel))
    return frames


def _stage_frames_from_shorten(model, pair: OrderedCycle, cfg,
                               n_collapse: int = 6):
    """Shorten a two-loop pair keeping snapshots, then collapse exactly.

    Returns frames ordered from the initial pair to the zero-length end.
    """
    res = shorten(pair, cfg, keep_snapshots=True)
    if res.outcome != "reached_epsilon":
        raise StageJoinMismatch(
            f"face contraction did not collapse (outcome {res.outcome}); "
            "choose a different triangle")
    frames = [snap.cycle for _, snap in res.trace.snapshots]
    frames.append(res.final.cycle)
    frames.extend(_collapse_frames(model, res.final, n_collapse))
    return frames


def build_family(model: OrbifoldModel, tri: Triangulation,
                 cfg: Optional[DriverConfig] = None, grid_m: int = 96,
                 n_collapse: int = 6) -> SweepoutFamily:
    """The five-stage family over a grid of size ``grid_m``.

    Stage 1 plays the contraction of the faces (1,0,2) and (1,2,3)
    backwards into the figure-eight wedge at x1; stage 2 opens the
    backtrack along the edge x1-x2; stage 3 rebases from x1 to x0 through
    the six legs; stage 4 closes a backtrack along x3-x0; stage 5 plays
    the contraction of faces (0,2,3) and (0,3,1) forward.
    """
    v0 = tri.base_vertex
    v1, v2, v3 = tri.selected
    P = {}
    for (a, b) in [(v1, v0), (v0, v2), (v2, v1), (v1, v2), (v2, v3),
                   (v3, v1), (v3, v0), (v0, v3), (v0, v1), (v1, v3),
                   (v3, v2), (v2, v0)]:
        P[(a, b)] = tri.edge_path(a, b)

    def loop(*vs):
        from .cycles import concatenate
        out = P[(vs[0], vs[1])]
        for a, b in zip(vs[1:-1], vs[2:]):
            out = concatenate(out, P[(a, b)])
        return out

    c102 = loop(v1, v0, v2, v1)
    c123 = loop(v1, v2, v3, v1)
    c023 = loop(v0, v2, v3, v0)
    c031 = loop(v0, v3, v1, v0)
    pair1 = cycle_from_halves(model, c102, c123, CycleKind.TWO_LOOPS)
    pair5 = cycle_from_halves(model, c023, c031, CycleKind.TWO_LOOPS)
    budget = max(pair1.length(), pair5.length()) * 1.05 + model.delta
    if cfg is None:
        cfg = make_driver_config(model, length_budget=budget)
    from .birkhoff import normalize_breaks
    oc1 = OrderedCycle(pair1, pair1.t[1:].copy())
    oc5 = OrderedCycle(pair5, pair5.t[1:].copy())
    frames1 = _stage_frames_from_shorten(model, oc1, cfg, n_collapse)
    frames5 = _stage_frames_from_shorten(model, oc5, cfg, n_collapse)

    def half_split(path_list):
        from .cycles import cycle_from_halves as cfh
        return path_list

    grid = np.linspace(0.0, 1.0, grid_m)
    samples: List[OrderedCycle] = []
    kinds: List[str] = []
    e10, e02, e21 = P[(v1, v0)], P[(v0, v2)], P[(v2, v1)]
    e12, e23, e31 = P[(v1, v2)], P[(v2, v3)], P[(v3, v1)]
    e30, e03, e01 = P[(v3, v0)], P[(v0, v3)], P[(v0, v1)]
    e13, e32, e20 = P[(v1, v3)], P[(v3, v2)], P[(v2, v0)]

    def join_paths(paths):
        parts_t, parts_s, parts_v, parts_c, parts_j = [], [], [], [], []
        offset = 0.0
        total = sum(max(p.t[-1] - p.t[0], 1e-9) for p in paths)
        for p in paths:
            q = p.reparametrized(offset, offset + (p.t[-1] - p.t[0]) / total)
            if parts_t:
                parts_j.append(_I3)
            parts_t.append(q.t[:-1] if p is not paths[-1] else q.t)
            parts_s.append(q.start)
            parts_v.append(q.vel)
            parts_c.append(q.chart)
            if len(q.junc):
                parts_j.extend(list(q.junc))
            offset += (p.t[-1] - p.t[0]) / total
        return None

    def assemble(half1_paths, half2_paths):
        h1 = _concat_free(model, half1_paths)
        h2 = _concat_free(model, half2_paths)
        c = cycle_from_halves(model, h1, h2, CycleKind.SINGLE_LOOP)
        return OrderedCycle(c, c.t[1:].copy())

    for t in grid:
        if t <= 1.0 / 3.0 + 1e-12:
            u = 3.0 * t          # 0 -> collapsed, 1 -> wedge
            idx = int(round((1.0 - u) * (len(frames1) - 1)))
            cyc = frames1[idx]
            samples.append(OrderedCycle(cyc, cyc.t[1:].copy()))
            kinds.append("two_loops" if u < 1 - 1e-12 else "figure_eight")
        elif t < 2.0 / 3.0 - 1e-12:
            w = (t - 1.0 / 3.0) * 3.0   # in (0, 1)
            if w <= 0.25:
                s = w / 0.25
                half1 = [e10, e02, e21.restrict(0.0, max(1.0 - s, 0.0))]
                half2 = [e12.restrict(min(s, 1.0), 1.0), e23, e31]
            elif w <= 0.75:
                u6 = (w - 0.25) / 0.5 * 6.0
                half1, half2 = _stage3_legs(u6, e10, e02, e21, e12, e23, e31,
                                            e30, e03, e01, e13, e32, e20)
            else:
                s = (w - 0.75) / 0.25
                half1 = [e02, e23, e30.restrict(0.0, s)]
                half2 = [e03.restrict(1.0 - s, 1.0), e31, e10]
            samples.append(assemble(half1, half2))
            kinds.append("single_loop")
        else:
            u = (1.0 - t) * 3.0  # 1 at the wedge, 0 at the end
            idx = int(round((1.0 - u) * (len(frames5) - 1)))
            cyc = frames5[idx]
            samples.append(OrderedCycle(cyc, cyc.t[1:].copy()))
            kinds.append("two_loops" if u < 1 - 1e-12 else "figure_eight")
    max_len = max(s.length() for s in samples)
    d_lo, d_up = estimate_diameter(model)
    return SweepoutFamily(model, grid, samples, kinds, max_len, tri, d_up,
                          tri.max_edge)


def _concat_free(model, paths):
    from .cycles import concatenate
    live = [p for p in paths if p.m > 0]
    out = live[0]
    for p in live[1:]:
        if p.length() < 1e-14 and p.m == 1:
            continue
        out = concatenate(out, p)
    return out


def _stage3_legs(u, e10, e02, e21, e12, e23, e31, e30, e03, e01, e13, e32, e20):
    """The six rebasing legs (tip x2 -> x3 then basepoint x1 -> x0)."""
    if u <= 1.0:
        s = u
        half1 = [e10, e02, e23.restrict(0.0, s)]
        half2 = [e23.restrict(s, 1.0), e31]
    elif u <= 2.0:
        s = u - 1.0
        half1 = [e10, e02, e23]
        half2 = [e31.restrict(0.0, s), e31.restrict(s, 1.0)]
    elif u <= 4.0:
        s = (u - 2.0) / 2.0
        half1 = [e10.restrict(s, 1.0), e02, e23]
        half2 = [e31, e10.restrict(0.0, s)]
    elif u <= 5.0:
        s = u - 4.0
        half1 = [e02.restrict(0.0, s), e02.restrict(s, 1.0), e23]
        half2 = [e31, e10]
    else:
        s = u - 5.0
        half1 = [e02, e23.restrict(0.0, s), e23.restrict(s, 1.0)]
        half2 = [e31, e10]
    return half1, half2


# ---------------------------------------------------------------------------
# estimators and the oracle
# ---------------------------------------------------------------------------

def estimate_diameter(model: OrbifoldModel, h: Optional[float] = None,
                      max_net: int = 420):
    """(lower, upper) diameter bracket from an h-net of the region samples."""
    xs = model.region_samples()
    if len(xs) > max_net:
        idx = np.linspace(0, len(xs) - 1, max_net).astype(int)
        net = xs[idx]
    else:
        net = xs
    K = model.group
    space = model.space
    d_lo = 0.0
    # pairwise distances via orbit images, blockwise
    imgs = np.stack([geo.apply_motion_points(space, K, p) for p in net])
    nn = np.inf * np.ones(len(net))
    for i in range(len(net)):
        d = bdist(space, net[i][None, None, :], imgs).min(axis=1)
        d_lo = max(d_lo, float(d.max()))
        d[i] = np.inf
        nn[i] = float(d.min())
    # proxy for the net's covering radius: its largest nearest-neighbour
    # spacing (callers may pass the true mesh width instead)
    h_eff = h if h is not None else float(np.max(nn))
    return d_lo, d_lo + 2 * h_eff


def estimate_area(model: OrbifoldModel, mc_samples: int = 0,
                  rng: Optional[np.random.Generator] = None) -> float:
    """Closed-form area of the canonical models (stored at construction)."""
    return model.area


def _rotation_angle(m: np.ndarray) -> float:
    c = (np.trace(m) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def shortest_geodesic_oracle(model: OrbifoldModel,
                             group: Optional[np.ndarray] = None,
                             mirror: bool = False) -> float:
    """Minimum positive closed-geodesic length by deck-transformation search.

    Sphere quotients: the smallest rotation angle times the radius (the
    equator image).  Flat doubled polygons: the shortest translation, or
    half the glide length for orientation-reversing elements (mirror
    case), plus order-2 cone bounces.  Hyperbolic: translation lengths of
    hyperbolic elements.
    """
    space = model.space
    G = group if group is not None else \
        (model.mirror_group() if mirror else model.group)
    kind = model.spec.get("kind")
    R = space.scale
    if kind == "RoundSphere" and not mirror:
        return 2 * np.pi * R
    cands: List[float] = []
    if space.curvature_sign > 0:
        for m in G:
            det = np.linalg.det(m)
            if det > 0:
                th = _rotation_angle(m)
                if th > 1e-9:
                    cands.append(R * th)
            else:
                m2 = m @ m
                th = _rotation_angle(m2)
                if th > 1e-9:
                    cands.append(R * th / 2)
        if kind == "RoundSphere":
            cands.append(2 * np.pi * R)
    elif space.curvature_sign == 0:
        for m in G:
            lin = m[:2, :2]
            tvec = m[:2, 2]
            if np.linalg.det(lin) > 0:
                if np.max(np.abs(lin - np.eye(2))) < 1e-9:
                    ell = float(np.linalg.norm(tvec))
                    if ell > 1e-9:
                        cands.append(ell)
            else:
                m2 = m @ m
                if np.max(np.abs(m2[:2, :2] - np.eye(2))) < 1e-9:
                    ell = float(np.linalg.norm(m2[:2, 2])) / 2
                    if ell > 1e-9:
                        cands.append(ell)
    else:
        for m in G:
            if np.linalg.det(m) < 0:
                m = m @ m
            tr = float(np.trace(m))
            if tr > 3.0 + 1e-9:
                cands.append(R * np.arccosh((tr - 1.0) / 2.0))
    # order-2 cone bounces (geodesics through a pair of order-2 points)
    if not mirror:
        twos = [s for s in model.singular_points if s.order == 2]
        for i in range(len(twos)):
            for j in range(i + 1, len(twos)):
                d = model.quotient_distance(
                    OrbifoldPoint(twos[i].chart, twos[i].position),
                    OrbifoldPoint(twos[j].chart, twos[j].position))
                if d > 1e-9:
                    cands.append(2 * d)
    if not cands:
        raise OracleInconclusive("no closed-geodesic candidates enumerated")
    return float(min(cands))


# ---------------------------------------------------------------------------
# end-to-end experiment
# ---------------------------------------------------------------------------

def verify_inequality(model: OrbifoldModel, grid_m: int = 96,
                      cfg: Optional[DriverConfig] = None,
                      family: Optional[SweepoutFamily] = None,
                      oracle_tolerance: float = 1e-2,
                      max_rounds: int = 4000) -> dict:
    """Run the full pipeline and check the systole-diameter inequality.

    Returns a report with the diameter bracket, the area, the detected
    geodesic length, the oracle value, and the pass flag for
    l_found <= 4 * D_upper + 2 * delta_tri.
    """
    t_start = time.perf_counter()
    if family is None:
        tri = triangulate(model)
        family = build_family(model, tri, cfg=cfg, grid_m=grid_m)
    else:
        tri = family.tri
    budget = family.max_length * 1.05 + model.delta
    run_cfg = cfg or make_driver_config(model, length_budget=budget)
    trace = deform_family(family.samples, run_cfg, grid=family.grid,
                          max_rounds=max_rounds)
    l_oracle = shortest_geodesic_oracle(model)
    found = trace.found_lengths()
    l_found = min(found) if found else None
    d_lo, d_up = estimate_diameter(model)
    bound = 4 * d_up + 2 * family.delta_tri
    report = {
        "model": model.label,
        "spec": model.spec,
        "D_lower": d_lo,
        "D_upper": d_up,
        "area": model.area,
        "delta": model.delta,
        "delta_tri": family.delta_tri,
        "family_max_length": family.max_length,
        "family_length_bound": family.length_bound(),
        "l_found": l_found,
        "l_oracle": l_oracle,
        "bound_4D": bound,
        "outcomes": trace.outcomes(),
        "pass": bool(l_found is not None and l_found <= bound + 1e-9
                     and abs(l_found - l_oracle) <= oracle_tolerance
                     or (l_found is None and l_oracle > bound)),
        "runtime_s": time.perf_counter() - t_start,
    }
    return report, trace


def double_comparison(model: OrbifoldModel) -> dict:
    """Corollary data for doubled models: D(double) <= 2 D(half) and
    l(half) <= l(double), both as concrete numbers."""
    if model.spec.get("kind") not in ("DoubledTriangle", "DoubledConvexPolygon"):
        raise ValueError("double comparison needs a doubled model")
    space = model.space
    if model.spec["kind"] == "DoubledTriangle":
        from .atlas import _triangle_vertices
        p, q, r = model.spec["orders"]
        verts = _triangle_vertices(space, (np.pi / p, np.pi / q, np.pi / r),
                                   model.spec.get("side", 1.0))
    else:
        verts = np.array(model.spec["vertices"])
    # diameter of the mirrored half: sampled over the polygon
    from .atlas import _polygon_samples, _incenter
    samples = _polygon_samples(space, verts, 0.1 * float(
        np.min([bdist(space, verts[i], verts[(i + 1) % len(verts)])
                for i in range(len(verts))])), None)
    d_half = 0.0
    for i in range(0, len(samples), 3):
        d = bdist(space, samples[i][None, :], samples)
        d_half = max(d_half, float(np.max(d)))
    d_double_lo, d_double_up = estimate_diameter(model)
    l_double = shortest_geodesic_oracle(model)
    l_half = shortest_geodesic_oracle(model, mirror=True)
    return {
        "model": model.label,
        "D_half": d_half,
        "D_double_lower": d_double_lo,
        "D_double_upper": d_double_up,
        "doubling_inequality": bool(d_double_lo <= 2 * d_half + 1e-6),
        "l_half": l_half,
        "l_double": l_double,
        "projection_inequality": bool(l_half <= l_double + 1e-9),
    }
