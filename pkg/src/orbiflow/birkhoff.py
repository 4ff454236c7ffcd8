"""Curve shortening by reparametrization and geodesic replacement.

Two elementary steps act on two-segment cycles:

* ``constant_speed`` reparametrizes each half to constant speed (length
  preserved exactly);
* ``geodesic_replacement`` chops each half into N uniform parameter cells
  (each of length < the covering margin delta) and replaces every cell by
  the unique minimizing geodesic between its endpoints (length never
  increases, closed geodesics are fixed points).

Both come with interpolating homotopies: ``rescale_homotopy`` slides the
parametrization along ``s id + (1-s) P`` where P is the piecewise-linear
reparametrization table, and ``replacement_homotopy`` grows the replaced
portion of every cell from nothing to the whole cell.  ``ordered_birkhoff``
runs the four-step variant on ordered cycles, tripling the breakpoint
schedule through a sorting map and collapsing it to the uniform grid at
the end.

Cell placement: every cell (a sub-chain of arcs and junction motions) is
developed into the coordinates of its first chart and then moved into a
chart ball deep enough to hold it; cells adjacent to a basepoint share one
placement so the literal endpoint identities survive.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from . import geometry as geo
from .atlas import OrbifoldModel
from .cycles import CycleKind, GCycle, OrderedCycle, _I3
from .errors import SegmentTooLong
from .geometry import apply_motion_points, apply_motion_vectors, bdist, bexp, \
    blog, btransport, motion_inverse


# ---------------------------------------------------------------------------
# piecewise-linear reparametrization tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReparamTable:
    """Nondecreasing piecewise-linear map [0,2] -> [0,2] with its knots."""

    knots: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        return np.interp(t, self.knots, self.values)

    def pseudo_inverse(self, v):
        """Upper pseudo-inverse with the left-endpoint convention on flats."""
        vals, kn = self.values, self.knots
        v = np.asarray(v, dtype=float)
        out = np.empty(v.shape if v.ndim else (1,))
        flat = v.reshape(-1)
        for idx, x in enumerate(flat):
            i = int(np.searchsorted(vals, x, side="left"))
            if i >= len(vals):
                out.reshape(-1)[idx] = kn[-1]
            elif vals[i] == x or i == 0:
                out.reshape(-1)[idx] = kn[i]
            else:
                w = (x - vals[i - 1]) / (vals[i] - vals[i - 1])
                out.reshape(-1)[idx] = kn[i - 1] + w * (kn[i] - kn[i - 1])
        return float(out[0]) if v.ndim == 0 else out.reshape(v.shape)


def _interp_with_knots(s: float, table: ReparamTable) -> ReparamTable:
    """The slide ``f_s = s id + (1-s) P`` as a table on the same knots."""
    return ReparamTable(table.knots, s * table.knots + (1 - s) * table.values)


# ---------------------------------------------------------------------------
# constant-speed reparametrization
# ---------------------------------------------------------------------------

def constant_speed(c: GCycle) -> Tuple[GCycle, ReparamTable]:
    """Constant-speed representative per half plus the table P with c = out o P.

    Zero-length halves keep their parametrization (P is the identity there);
    zero-length segments inside a nondegenerate half collapse to repeated
    knot values (parameter multiplicity).
    """
    lens = c.segment_lengths()
    S = c.t.copy()
    n, m = c.n_half, c.m
    for lo, hi, t0, t1 in ((0, n, 0.0, 1.0), (n, m, 1.0, 2.0)):
        lam = float(np.sum(lens[lo:hi]))
        if lam <= 0:
            continue
        S[lo + 1:hi + 1] = t0 + (t1 - t0) * np.cumsum(lens[lo:hi]) / lam
        S[hi] = t1
    widths_new = np.diff(S)
    vel = np.zeros_like(c.vel)
    for i in range(m):
        if widths_new[i] > 1e-15:
            w = c.t[i + 1] - c.t[i]
            vel[i] = c.vel[i] * (w / widths_new[i])
    out = replace(c, t=S, vel=vel)
    return out, ReparamTable(c.t.copy(), S.copy())


def rescale_homotopy(s: float, c: GCycle,
                     precomputed: Optional[Tuple[GCycle, ReparamTable]] = None
                     ) -> GCycle:
    """Slide from c (s=0) to its constant-speed representative (s=1).

    Length is exactly constant in s; the output subdivision is the union of
    the original knots (speed-jump points) and the pulled-back knots of the
    constant-speed representative.
    """
    d, table = precomputed if precomputed is not None else constant_speed(c)
    if s <= 0.0:
        return c
    if s >= 1.0:
        return d
    fs = _interp_with_knots(s, table)
    # pulled-back track knots; fs is strictly increasing for s > 0
    pulled = fs.pseudo_inverse(d.t)
    knots = np.unique(np.concatenate([c.t, pulled]))
    knots[0], knots[-1] = 0.0, 2.0
    # force the half boundary to be present exactly once
    knots = np.unique(np.concatenate([knots, [1.0]]))
    space = c.space
    m_new = len(knots) - 1
    starts, vels, charts = [], [], []
    juncs = []
    prev_seg = None
    n_half_new = 0
    for k in range(m_new):
        a, b = knots[k], knots[k + 1]
        half = 0 if b <= 1.0 + 1e-15 else 1
        if half == 0:
            n_half_new += 1
        fa, fb = float(fs(a)), float(fs(b))
        probe = 0.5 * (fa + fb) if fb > fa else fa
        j = d.segment_index(min(probe, 2.0), half)
        # evaluate d on [fa, fb] inside segment j
        x = bexp(space, d.start[j], (fa - d.t[j]) * d.vel[j])
        v = btransport(space, d.start[j], (fa - d.t[j]) * d.vel[j], d.vel[j])
        slope = (fb - fa) / (b - a) if b > a else 0.0
        starts.append(x)
        vels.append(v * slope)
        charts.append(int(d.chart[j]))
        if prev_seg is not None:
            if j == prev_seg:
                juncs.append(_I3)
            else:
                g = _I3
                for jj in range(prev_seg, j):
                    g = g @ d.junc[jj]
                juncs.append(g)
        prev_seg = j
    out = GCycle(c.model, c.kind, n_half_new, knots, np.stack(starts),
                 np.stack(vels), np.array(charts, dtype=int),
                 np.stack(juncs) if juncs else np.zeros((0, 3, 3)))
    return out


# ---------------------------------------------------------------------------
# geodesic replacement on the uniform grid
# ---------------------------------------------------------------------------

def _develop_half(c: GCycle, half: int):
    """Development motions: D[j] maps segment-j coords to first-segment coords."""
    lo, hi = (0, c.n_half) if half == 0 else (c.n_half, c.m)
    D = [np.eye(3)]
    for j in range(lo, hi - 1):
        D.append(D[-1] @ c.junc[j])
    return lo, hi, D


def _cell_pieces(c: GCycle, lo: int, hi: int, D, a: float, b: float):
    """Arcs of c covering [a, b] (one half), in developed coordinates.

    Returns pieces = [(ta, tb, x, v)] with x, v expressed in the
    coordinates of the half's first segment.
    """
    space = c.space
    pieces = []
    for j in range(lo, hi):
        ta, tb = max(float(c.t[j]), a), min(float(c.t[j + 1]), b)
        if tb - ta < 1e-15:
            continue
        x = bexp(space, c.start[j], (ta - c.t[j]) * c.vel[j])
        v = btransport(space, c.start[j], (ta - c.t[j]) * c.vel[j], c.vel[j])
        xd = apply_motion_points(space, D[j - lo], x)
        vd = apply_motion_vectors(space, D[j - lo], v)
        pieces.append((ta, tb, xd, vd))
    if not pieces:
        # the window is a point or covered by degenerate segments
        half = 0 if b <= 1.0 + 1e-15 else 1
        j = c.segment_index(a, half)
        x = bexp(space, c.start[j], (a - c.t[j]) * c.vel[j])
        xd = apply_motion_points(space, D[j - lo], x)
        pieces.append((a, b, xd, np.zeros(space.dim)))
    return pieces


def _eval_developed(space, pieces, t):
    for (ta, tb, x, v) in pieces:
        if ta - 1e-12 <= t <= tb + 1e-12:
            return bexp(space, x, (t - ta) * v)
    ta, tb, x, v = pieces[-1]
    return bexp(space, x, (t - ta) * v)


def replacement_homotopy(s: float, c: GCycle, n_cells: int,
                         delta: Optional[float] = None) -> GCycle:
    """Replace the initial s-fraction of every uniform cell by a geodesic.

    s = 0 reproduces the input (up to subdivision bookkeeping), s = 1 is
    the full geodesic replacement with one arc per cell.  Cells touching a
    basepoint share chart placements so the endpoint identities stay
    literal.
    """
    model = c.model
    space = c.space
    delta = delta if delta is not None else model.delta
    N = int(n_cells)
    if N < 2:
        raise ValueError("need at least 2 cells per half")
    # cell k: [grid[k], grid[k+1]], k = 0..2N-1
    grid = np.concatenate([np.linspace(0, 1, N + 1),
                           np.linspace(1, 2, N + 1)[1:]])
    halves = {0: _develop_half(c, 0), 1: _develop_half(c, 1)}
    cells = []
    for k in range(2 * N):
        a, b = float(grid[k]), float(grid[k + 1])
        half = 0 if k < N else 1
        lo, hi, D = halves[half]
        pieces = _cell_pieces(c, lo, hi, D, a, b)
        xa = _eval_developed(space, pieces, a)
        clen = sum(geo.norm(space, v) * (tb - ta) for (ta, tb, x, v) in pieces)
        j = c.segment_index(a, half)
        cells.append(dict(a=a, b=b, half=half, pieces=pieces,
                          U=D[j - lo], entry_chart=int(c.chart[j]),
                          xa=xa, length=float(clen)))
        if clen >= 0.98 * delta:
            raise SegmentTooLong(
                f"cell length {clen:.4g} >= delta {delta:.4g}")
    # placements: (motion acting on cell-entry coordinates, host chart)
    place = [None] * (2 * N)

    def anchored(cellidxs, anchor_chart, anchor_pos, dev_motions):
        """One chart hosts every listed cell around a shared basepoint lift."""
        need = max(cells[k]["length"] for k in cellidxs)
        h_mot, h_chart = model.place_arc(anchor_chart, anchor_pos,
                                         min(need, 0.98 * model.delta))
        for k, dm in zip(cellidxs, dev_motions):
            place[k] = (h_mot @ dm @ cells[k]["U"], h_chart)

    n = c.n_half
    lo0, hi0, D0 = halves[0]
    lo1, hi1, D1 = halves[1]
    Dlast0 = D0[hi0 - 1 - lo0]      # last half-0 segment coords -> developed
    Dlast1 = D1[hi1 - 1 - lo1]
    inv0 = motion_inverse(space, Dlast0)
    inv1 = motion_inverse(space, Dlast1)
    if c.kind is CycleKind.FIGURE_EIGHT:
        anchored([0, N - 1, N, 2 * N - 1], int(c.chart[0]), c.start[0],
                 [_I3, inv0, _I3, inv1])
    elif c.kind is CycleKind.TWO_LOOPS:
        anchored([0, N - 1], int(c.chart[0]), c.start[0], [_I3, inv0])
        anchored([N, 2 * N - 1], int(c.chart[n]), c.start[n], [_I3, inv1])
    else:
        anchored([0, 2 * N - 1], int(c.chart[0]), c.start[0], [_I3, inv1])
        anchored([N - 1, N], int(c.chart[n]), c.start[n], [inv0, _I3])
    for k, cell in enumerate(cells):
        if place[k] is None:
            # place_arc works in the entry chart's coordinates
            xa_entry = apply_motion_points(
                space, motion_inverse(space, cell["U"]), cell["xa"])
            mot, tgt = model.place_arc(cell["entry_chart"], xa_entry,
                                       min(cell["length"], 0.98 * model.delta))
            place[k] = (mot, tgt)
    return _assemble_replacement(c, s, N, grid, cells, place)


def _assemble_replacement(c, s, N, grid, cells, place):
    model, space = c.model, c.space
    knots = []
    starts, vels, charts, juncs = [], [], [], []
    n_half_new = 0
    end_motion = [None] * (2 * N)   # maps developed coords to hosted coords
    prev_end = None
    for k, cell in enumerate(cells):
        a, b = cell["a"], cell["b"]
        tau = (1 - s) * a + s * b
        g_mot, g_chart = place[k]
        # the hosting motion acts on cell-entry coordinates; cell pieces are
        # in developed (first-segment-of-half) coordinates
        U = cell["U"]
        host = g_mot @ motion_inverse(space, U)
        end_motion[k] = (host, g_chart)
        pieces = cell["pieces"]
        xa = apply_motion_points(space, host, cell["xa"])
        x_tau = apply_motion_points(space, host,
                                    _eval_developed(space, pieces, tau))
        local = []
        if tau > a + 1e-15 or s >= 1.0:
            v = blog(space, xa, x_tau) / max(tau - a, 1e-300)
            local.append((a, tau, xa, v if tau - a > 1e-15 else 0 * xa))
        if s < 1.0 and tau < b - 1e-15:
            for (ta, tb, x, v) in pieces:
                lo_t, hi_t = max(ta, tau), min(tb, b)
                if hi_t - lo_t < 1e-15:
                    continue
                xx = bexp(space, x, (lo_t - ta) * v)
                vv = btransport(space, x, (lo_t - ta) * v, v)
                local.append((lo_t, hi_t,
                              apply_motion_points(space, host, xx),
                              apply_motion_vectors(space, host, vv)))
        if not local:
            local = [(a, b, xa, 0 * xa)]
        for (ta, tb, x, v) in local:
            knots.append(ta)
            starts.append(x)
            vels.append(np.asarray(v))
            charts.append(g_chart)
            if len(starts) > 1:
                juncs.append(_I3 if prev_end == k else None)  # fill later
            prev_end = k
        if cell["half"] == 0:
            n_half_new += len(local) if False else 0
    # rebuild juncs: identity within a cell; between cells k and k+1 the
    # motion host_k @ host_{k+1}^{-1} expressed on the junction point
    knots.append(2.0)
    starts = np.stack(starts)
    vels = np.stack(vels)
    charts = np.array(charts, dtype=int)
    knots = np.array(knots)
    # recompute segment cell membership to build junction motions
    juncs = []
    seg_cell = np.searchsorted(grid, knots[:-1], side="right") - 1
    seg_cell = np.clip(seg_cell, 0, 2 * N - 1)
    for i in range(len(starts) - 1):
        ka, kb = int(seg_cell[i]), int(seg_cell[i + 1])
        if ka == kb:
            juncs.append(_I3)
        else:
            ha, _ = end_motion[ka]
            hb, _ = end_motion[kb]
            juncs.append(ha @ motion_inverse(space, hb))
    n_half_new = int(np.sum(knots[:-1] < 1.0 - 1e-15))
    out = GCycle(model, c.kind, n_half_new, knots, starts, vels, charts,
                 np.stack(juncs) if juncs else np.zeros((0, 3, 3)))
    return out


def _develop_arrays(c: GCycle, half: int):
    from .geometry import apply_motion_points, apply_motion_vectors
    lo, hi = (0, c.n_half) if half == 0 else (c.n_half, c.m)
    D = [np.eye(3)]
    for j in range(lo, hi - 1):
        D.append(D[-1] @ c.junc[j])
    D = np.stack(D)
    Dstart = apply_motion_points(c.space, D, c.start[lo:hi])
    Dvel = apply_motion_vectors(c.space, D, c.vel[lo:hi])
    return lo, hi, D, Dstart, Dvel


def geodesic_replacement(c: GCycle, n_cells: int,
                         delta: Optional[float] = None) -> GCycle:
    """Full per-cell replacement: one minimizing arc per uniform cell.

    Batched fast path: develops each half once, evaluates all cell
    boundaries in stacked arrays, and assigns one host chart per cell
    (boundary cells share their basepoint's placement so the endpoint
    identities stay literal).
    """
    from .geometry import apply_motion_points, apply_motion_vectors
    model, space = c.model, c.space
    delta = delta if delta is not None else model.delta
    N = int(n_cells)
    if N < 2:
        raise ValueError("need at least 2 cells per half")
    halves = {h: _develop_arrays(c, h) for h in (0, 1)}
    bounds, dev_pts, entry_seg, entry_U = [], [], [], []
    for h in (0, 1):
        lo, hi, D, Dstart, Dvel = halves[h]
        t_half = c.t[lo:hi + 1]
        bks = np.linspace(float(t_half[0]), float(t_half[-1]), N + 1)
        # the developed curve is continuous, so any segment whose closed
        # parameter interval contains the boundary evaluates identically
        j = np.clip(np.searchsorted(t_half, bks, side="right") - 1, 0,
                    hi - lo - 1)
        pts = bexp(space, Dstart[j], (bks - t_half[j])[:, None] * Dvel[j])
        # per-half cell lengths via the constant-speed structure
        lam = float(np.sum(geo.norm(space, c.vel[lo:hi]) * np.diff(t_half)))
        if lam / N >= 0.98 * delta:
            raise SegmentTooLong(
                f"cell length {lam / N:.4g} >= delta {delta:.4g}")
        bounds.append(bks)
        dev_pts.append(pts)
        entry_seg.append(j[:-1] + lo)
        entry_U.append(D[j[:-1]])
    # assemble per-cell data over the full 2N grid
    cell_a = np.concatenate([dev_pts[0][:-1], dev_pts[1][:-1]])
    cell_b = np.concatenate([dev_pts[0][1:], dev_pts[1][1:]])
    Us = np.concatenate([entry_U[0], entry_U[1]])
    segs = np.concatenate([entry_seg[0], entry_seg[1]])
    grid = np.concatenate([bounds[0], bounds[1][1:]])
    lens = geo.norm(space, geo.blog(space, cell_a, cell_b))
    # host motions map developed coordinates into the cell's target chart
    host_mot = [None] * (2 * N)
    place_chart = [None] * (2 * N)

    def anchored(cellidxs, anchor_chart, anchor_pos, dev_motions):
        need = float(max(lens[k] for k in cellidxs)) + 1e-12
        h_mot, h_chart = model.place_arc(anchor_chart, anchor_pos,
                                         min(need, 0.98 * model.delta))
        for k, dm in zip(cellidxs, dev_motions):
            host_mot[k] = h_mot @ dm
            place_chart[k] = h_chart
    n = c.n_half
    Dlast0 = halves[0][2][-1]
    Dlast1 = halves[1][2][-1]
    inv0 = motion_inverse(space, Dlast0)
    inv1 = motion_inverse(space, Dlast1)
    if c.kind is CycleKind.FIGURE_EIGHT:
        anchored([0, N - 1, N, 2 * N - 1], int(c.chart[0]), c.start[0],
                 [_I3, inv0, _I3, inv1])
    elif c.kind is CycleKind.TWO_LOOPS:
        anchored([0, N - 1], int(c.chart[0]), c.start[0], [_I3, inv0])
        anchored([N, 2 * N - 1], int(c.chart[n]), c.start[n], [_I3, inv1])
    else:
        anchored([0, 2 * N - 1], int(c.chart[0]), c.start[0], [_I3, inv1])
        anchored([N - 1, N], int(c.chart[n]), c.start[n], [inv0, _I3])
    # interior cells: group by entry chart and place in batch
    todo = [k for k in range(2 * N) if host_mot[k] is None]
    invU = motion_inverse(space, Us)
    xa_entry = apply_motion_points(space, invU, cell_a)
    by_chart = {}
    for k in todo:
        by_chart.setdefault(int(c.chart[segs[k]]), []).append(k)
    for cid, ks in by_chart.items():
        mots, tgts = model.germs_from(cid)
        centers = np.stack([model.charts[t].center for t in tgts])
        radii = np.array([model.charts[t].radius for t in tgts])
        pts = xa_entry[ks]                                   # (q, d)
        img = np.stack([apply_motion_points(space, mots, p)
                        for p in pts])                       # (q, g, d)
        d = bdist(space, img, centers[None, :, :])           # (q, g)
        ok = d <= (radii[None, :] - lens[ks][:, None])
        d_masked = np.where(ok, d, np.inf)
        best = np.argmin(d_masked, axis=1)
        for row, k in enumerate(ks):
            g = int(best[row])
            if not np.isfinite(d_masked[row, g]):
                raise SegmentTooLong("no chart hosts a replacement cell")
            host_mot[k] = mots[g] @ invU[k]
            place_chart[k] = int(tgts[g])
    hosts = np.stack(host_mot)
    ha = apply_motion_points(space, hosts, cell_a)
    hb = apply_motion_points(space, hosts, cell_b)
    widths = np.diff(grid)
    vel = np.zeros_like(ha)
    pos = widths > 1e-15
    vel[pos] = geo.blog(space, ha[pos], hb[pos]) / widths[pos][:, None]
    juncs = np.stack([hosts[k] @ motion_inverse(space, hosts[k + 1])
                      for k in range(2 * N - 1)])
    return GCycle(model, c.kind, N, grid, ha, vel,
                  np.array(place_chart, dtype=int), juncs)


def birkhoff_step(c: GCycle, n_cells: int) -> GCycle:
    """Constant speed then geodesic replacement (one shortening pass)."""
    d, _ = constant_speed(c)
    return geodesic_replacement(d, n_cells)


# ---------------------------------------------------------------------------
# ordered four-step variant
# ---------------------------------------------------------------------------

def sort_schedule(*blocks) -> np.ndarray:
    """The sorting map: concatenate breakpoint blocks and sort ascending."""
    return np.sort(np.concatenate([np.asarray(b, dtype=float) for b in blocks]))


def normalize_breaks(oc: OrderedCycle, n: int) -> OrderedCycle:
    """Pad or validate the breakpoint list to exactly n values per half.

    Padding adds fake breakpoints (multiplicity at the half ends), which is
    legitimate because breakpoints only over-estimate the corner set.
    """
    b = oc.breaks
    k = int(np.searchsorted(b, 1.0, side="right"))
    first, second = b[:k], b[k:]
    if len(first) > n or len(second) > n:
        raise ValueError("cycle has more breakpoints than the requested grid")
    first = np.concatenate([first, np.full(n - len(first), 1.0)])
    second = np.concatenate([second, np.full(n - len(second), 2.0)])
    return OrderedCycle(oc.cycle, sort_schedule(first, second))


def ordered_birkhoff(oc: OrderedCycle, n: int,
                     samples_per_stage: int = 5
                     ) -> Tuple[List[Tuple[float, OrderedCycle]], OrderedCycle]:
    """Four-stage shortening pass on an ordered cycle.

    Stage 1 rescales to constant speed while tripling the breakpoint
    schedule through the sorting map; stages 2 and 4 only migrate
    breakpoints; stage 3 is the geodesic-replacement homotopy.  The final
    cycle carries the uniform breakpoints i/n and one geodesic arc per
    cell.  Returns (trace of (time in [0,4], snapshot), final).
    """
    oc = normalize_breaks(oc, n)
    c0 = oc.cycle
    t_br = oc.breaks                      # 2n values per construction
    pre = constant_speed(c0)
    d, table = pre
    P_br = table(t_br)
    trace: List[Tuple[float, OrderedCycle]] = []
    ss = np.linspace(0.0, 1.0, max(2, samples_per_stage))
    uni = np.concatenate([np.arange(1, n + 1) / n, 1 + np.arange(1, n + 1) / n])
    uni_lo = np.concatenate([np.arange(0, n) / n, 1 + np.arange(0, n) / n])
    # stage 1: rescale; schedule (t, t, f_s^-1(P(t)))
    for s in ss:
        cy = rescale_homotopy(float(s), c0, precomputed=pre)
        if s == 0.0:
            pulled = t_br.copy()
        else:
            fs = _interp_with_knots(float(s), table)
            pulled = fs.pseudo_inverse(P_br)
        trace.append((float(s),
                      OrderedCycle(cy, sort_schedule(t_br, t_br, pulled))))
    # stage 2: breakpoints migrate toward the uniform grid
    for s in ss[1:]:
        sched = sort_schedule(P_br,
                              (1 - s) * t_br + s * uni,
                              (1 - s) * t_br + s * uni_lo)
        trace.append((1 + float(s), OrderedCycle(d, sched)))
    # stage 3: replacement homotopy; moving corners tracked in the schedule
    for s in ss[1:]:
        cy = replacement_homotopy(float(s), d, n)
        sched = sort_schedule(uni, (1 - s) * uni_lo + s * uni, P_br)
        trace.append((2 + float(s), OrderedCycle(cy, sched)))
    final_cycle = trace[-1][1].cycle
    # stage 4: collapse the schedule onto the uniform grid
    for s in ss[1:]:
        sched = sort_schedule(uni, uni, (1 - s) * P_br + s * uni)
        trace.append((3 + float(s), OrderedCycle(final_cycle, sched)))
    final = OrderedCycle(final_cycle, uni.copy())
    return trace, final
