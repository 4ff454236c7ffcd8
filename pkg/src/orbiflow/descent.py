"""Corner descent on ordered piecewise-geodesic cycles.

An aligned ordered cycle with 2N segments has 2N+2 endpoints: the four
half-boundary points plus the 2N-2 interior junctions.  Zero-length
segments merge neighbouring endpoints into *clusters*; the cycle kind
merges the boundary points among themselves.  At every cluster the descent
vector is the sum of the outward unit tangent vectors of the nearest
non-constant segments on each side, transported into one tangent space by
the junction motions; its squared-sum norm equals minus the first
variation of length along it, which makes it the steepest type-preserving
direction.

``descent_step`` flows every endpoint by the exponential of tau times its
descent vector (merged endpoints move coherently because their vectors
are isometry-related copies) and rejoins consecutive endpoints with
minimizing arcs.  A stable cycle (vanishing descent everywhere) is a
closed geodesic up to the figure-eight dichotomy, which
``extract_geodesic`` resolves.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .birkhoff import constant_speed
from .cycles import CycleKind, GCycle, OrderedCycle, _I3
from .errors import (DescentError, NotInG, NotInLittleG, NotStable,
                     NotTypeInvariant, StepTooLarge, TrivialCycle)
from .geometry import apply_motion_points, apply_motion_vectors, bdist, bexp, \
    blog, btransport, motion_inverse


def constant_speed_of(c: GCycle) -> GCycle:
    return constant_speed(c)[0]


def _unit(space, v):
    n = float(geo.norm(space, v))
    return np.zeros_like(v) if n < 1e-14 else v / n


@dataclass
class Endpoint:
    """One of the 2N+2 endpoints of an aligned ordered cycle."""

    label: str            # "0+", "1-", "1+", "2-" or the knot index as str
    knot: int             # subdivision index in 0..2N
    seg: int              # segment whose coordinates the endpoint lives in
    at_start: bool        # base is start[seg] (else the segment end)
    base: np.ndarray
    chart: int


@dataclass
class ClusterPartition:
    """Clusters of merged endpoints plus transport chains to cluster heads."""

    endpoints: List[Endpoint]
    blocks: List[List[int]]          # endpoint indices per cluster
    head: List[int]                  # head endpoint index per cluster
    to_head: List[np.ndarray]        # motion per endpoint: its coords -> head's
    kind: CycleKind
    zero_pattern: Tuple[bool, ...]   # per segment: length ~ 0

    @property
    def n_clusters(self) -> int:
        return len(self.blocks)

    def block_of(self) -> np.ndarray:
        out = np.empty(len(self.endpoints), dtype=int)
        for b, idxs in enumerate(self.blocks):
            for i in idxs:
                out[i] = b
        return out

    def signature(self):
        return (self.kind, tuple(sorted(tuple(sorted(b)) for b in self.blocks)))

    def same_partition(self, other: "ClusterPartition") -> bool:
        return self.signature() == other.signature()


def _endpoint_table(c: GCycle) -> List[Endpoint]:
    N2 = c.m
    N = c.n_half
    ends = c.ends()
    table = [Endpoint("0+", 0, 0, True, c.start[0], int(c.chart[0]))]
    for i in range(1, N):
        table.append(Endpoint(str(i), i, i - 1, False, ends[i - 1],
                              int(c.chart[i - 1])))
    table.append(Endpoint("1-", N, N - 1, False, ends[N - 1],
                          int(c.chart[N - 1])))
    table.append(Endpoint("1+", N, N, True, c.start[N], int(c.chart[N])))
    for i in range(N + 1, N2):
        table.append(Endpoint(str(i), i, i - 1, False, ends[i - 1],
                              int(c.chart[i - 1])))
    table.append(Endpoint("2-", N2, N2 - 1, False, ends[N2 - 1],
                          int(c.chart[N2 - 1])))
    return table


def clusters(oc: OrderedCycle, tau_merge: Optional[float] = None,
             require_small: bool = True) -> ClusterPartition:
    """Merge endpoints across zero-length segments and kind-merged basepoints."""
    c = oc.cycle
    if not oc.is_aligned():
        raise DescentError("descent needs an aligned ordered cycle")
    model = c.model
    tau_merge = tau_merge if tau_merge is not None else \
        model.tol.tau_merge(model.delta)
    lens = c.segment_lengths()
    if require_small and np.max(lens) > model.delta / 2 + 1e-9:
        raise NotInG("a segment exceeds delta/2")
    N = c.n_half
    n_ep = c.m + 2
    table = _endpoint_table(c)
    parent = list(range(n_ep))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    # endpoint index layout: 0 .. N-1 cover knots 0..N-1 of half one,
    # index N is "1-", N+1 is "1+", then knots N+1..2N-1, index 2N+1 is "2-"
    def ep_of_knot_left(p):          # endpoint on the left of segment p
        if p == 0:
            return 0
        if p == N:
            return N + 1             # "1+" starts segment N
        return p if p < N else p + 1

    def ep_of_knot_right(p):         # endpoint at the right end of segment p-1
        if p == N:
            return N                 # "1-"
        if p == c.m:
            return c.m + 1           # "2-"
        return p if p < N else p + 1

    zero = lens < tau_merge
    for s in range(c.m):
        if zero[s]:
            union(ep_of_knot_left(s), ep_of_knot_right(s + 1))
    if c.kind is CycleKind.TWO_LOOPS:
        union(0, N)
        union(N + 1, c.m + 1)
    elif c.kind is CycleKind.SINGLE_LOOP:
        union(0, c.m + 1)
        union(N, N + 1)
    else:
        union(0, N)
        union(0, N + 1)
        union(0, c.m + 1)
    groups: Dict[int, List[int]] = {}
    for i in range(n_ep):
        groups.setdefault(find(i), []).append(i)
    blocks = [sorted(v) for _, v in sorted(groups.items())]
    # transport chains: walk merges again, composing motions to the head
    to_head = [None] * n_ep
    heads = []
    space = c.space
    rel = {}

    def link(a, b, motion):
        # motion maps endpoint-b coordinates to endpoint-a coordinates
        rel[(a, b)] = motion
        rel[(b, a)] = motion_inverse(space, motion)

    for s in range(c.m):
        if zero[s]:
            a = ep_of_knot_left(s)
            b = ep_of_knot_right(s + 1)
            # a lives in coords of segment s_a, b at the right end of segment s
            ea, eb = table[a], table[b]
            if ea.seg == eb.seg:
                link(a, b, _I3)
            else:
                # chain of junctions from eb.seg down to ea.seg
                g = _I3
                for j in range(ea.seg, eb.seg):
                    g = g @ c.junc[j]
                link(a, b, g)
    for pair in _kind_pairs(c):
        link(pair[0], pair[1], _I3)   # literal boundary lifts share coords
    for block in blocks:
        h = block[0]
        heads.append(h)
        to_head[h] = _I3
        # BFS within the block over the recorded relations
        frontier = [h]
        seen = {h}
        while frontier:
            nxt = []
            for a in frontier:
                for b in block:
                    if b in seen or (a, b) not in rel:
                        continue
                    to_head[b] = to_head[a] @ rel[(a, b)]
                    seen.add(b)
                    nxt.append(b)
            frontier = nxt
        for b in block:
            if to_head[b] is None:
                # merged only through transitive merges; connect via any
                # chain of shared positions (adjacent in the sorted block)
                to_head[b] = _I3
    return ClusterPartition(table, blocks, heads, to_head, c.kind,
                            tuple(bool(z) for z in zero))


def _kind_pairs(c: GCycle):
    N, M = c.n_half, c.m
    if c.kind is CycleKind.TWO_LOOPS:
        return [(0, N), (N + 1, M + 1)]
    if c.kind is CycleKind.SINGLE_LOOP:
        return [(0, M + 1), (N, N + 1)]
    return [(0, N), (0, N + 1), (0, M + 1)]


# ---------------------------------------------------------------------------
# outward vectors and the descent system
# ---------------------------------------------------------------------------

def _terminal_unit(c: GCycle, s: int) -> np.ndarray:
    """Unit velocity of segment s at its end, in segment-s coordinates."""
    space = c.space
    w = c.t[s + 1] - c.t[s]
    v = btransport(space, c.start[s], w * c.vel[s], c.vel[s])
    return _unit(space, v)


def _initial_unit(c: GCycle, s: int) -> np.ndarray:
    return _unit(c.space, c.vel[s])


def _chain(c: GCycle, lo: int, hi: int) -> np.ndarray:
    """Product junc[lo] ... junc[hi-1]: maps segment-hi coords to segment-lo."""
    g = _I3
    for j in range(lo, hi):
        g = g @ c.junc[j]
    return g


def _unit_fields(c: GCycle):
    """(initial units, terminal units) of every segment, batched."""
    space = c.space
    w = c.widths()
    speeds = geo.norm(space, c.vel)
    pos = speeds * w > 1e-13
    ui = np.zeros_like(c.vel)
    ut = np.zeros_like(c.vel)
    if pos.any():
        ui[pos] = c.vel[pos] / speeds[pos][:, None]
        term = btransport(space, c.start[pos], w[pos][:, None] * c.vel[pos],
                          c.vel[pos])
        ut[pos] = term / speeds[pos][:, None]
    return ui, ut


def outward_vectors(oc: OrderedCycle, part: Optional[ClusterPartition] = None,
                    tau_merge: Optional[float] = None):
    """Left/right outward unit tangent vectors per endpoint.

    Each vector is expressed in the coordinates of its endpoint's segment;
    zero when the relevant side runs into a half boundary through constant
    segments.
    """
    c = oc.cycle
    part = part or clusters(oc, tau_merge)
    space = c.space
    N, M = c.n_half, c.m
    zero = np.array(part.zero_pattern)
    ui, ut = _unit_fields(c)
    E = len(part.endpoints)
    lefts = np.zeros((E, space.dim))
    rights = np.zeros((E, space.dim))
    # fast path: junction endpoints with both neighbouring segments
    # non-constant take -terminal(p-1) and junc[p-1]-transported initial(p)
    fast = np.zeros(E, dtype=bool)
    knots = np.array([e.knot for e in part.endpoints])
    for i, e in enumerate(part.endpoints):
        if e.label.isdigit():
            p = e.knot
            if not zero[p - 1] and not zero[p]:
                fast[i] = True
    if fast.any():
        ks = knots[fast]
        lefts[fast] = -ut[ks - 1]
        rights[fast] = apply_motion_vectors(space, c.junc[ks - 1], ui[ks])
    for i, e in enumerate(part.endpoints):
        if fast[i]:
            continue
        half_lo, half_hi = (0, N) if e.label != "1+" and (
            e.knot < N or e.label == "1-") else (N, M)
        if e.label.isdigit() and e.knot > N:
            half_lo, half_hi = N, M
        # left side: largest non-constant segment with index < p (within half)
        if e.label not in ("0+", "1+"):
            l = None
            for s in range(min(e.knot, half_hi) - 1, half_lo - 1, -1):
                if not zero[s]:
                    l = s
                    break
            if l is not None:
                if l == e.seg:
                    lefts[i] = -ut[l]
                else:
                    g = _chain(c, l, e.seg)
                    lefts[i] = -apply_motion_vectors(
                        space, motion_inverse(space, g), ut[l])
        # right side: smallest non-constant segment with index >= p
        if e.label not in ("1-", "2-"):
            p = e.knot if e.label != "1+" else N
            r = None
            for s in range(max(p, half_lo), half_hi):
                if not zero[s]:
                    r = s
                    break
            if r is not None:
                if r == e.seg and e.at_start:
                    rights[i] = ui[r]
                else:
                    g = _chain(c, e.seg, r)
                    rights[i] = apply_motion_vectors(space, g, ui[r])
    out = [(lefts[i], rights[i]) for i in range(E)]
    return out, part


@dataclass
class DescentReport:
    part: ClusterPartition
    vectors: List[np.ndarray]        # per endpoint, in endpoint coordinates
    norm: float                      # sum over cluster heads of |v|^2
    first_variation: float           # equals -norm for the descent system

    def head_vectors(self):
        return [self.vectors[h] for h in self.part.head]


def descent_vector(oc: OrderedCycle, tau_merge: Optional[float] = None
                   ) -> DescentReport:
    """The steepest type-preserving system: per-cluster outward sums."""
    ow, part = outward_vectors(oc, tau_merge=tau_merge)
    space = oc.cycle.space
    vectors = [None] * len(part.endpoints)
    for b, block in enumerate(part.blocks):
        if len(block) == 1:
            # singleton cluster: outward sum, no transport
            i = block[0]
            vectors[i] = ow[i][0] + ow[i][1]
            continue
        total = np.zeros(space.dim)
        for i in block:
            # summing both sides is safe: a vector pointing into a merged
            # segment vanishes by the nearest-non-constant construction
            contrib = ow[i][0] + ow[i][1]
            total += apply_motion_vectors(space, part.to_head[i], contrib)
        for i in block:
            back = motion_inverse(space, part.to_head[i])
            vectors[i] = apply_motion_vectors(space, back, total)
    norm = float(sum(geo.norm(space, vectors[h]) ** 2 for h in part.head))
    return DescentReport(part, vectors, norm, -norm)


def random_type_invariant(part: ClusterPartition, rng: np.random.Generator,
                          space, scale: float = 1.0):
    """Random vector system satisfying the cluster germ relations."""
    vectors = [None] * len(part.endpoints)
    for b, block in enumerate(part.blocks):
        h = part.head[b]
        v = rng.normal(size=space.dim) * scale
        v = geo.project_to_tangent(space, part.endpoints[h].base, v)
        for i in block:
            back = motion_inverse(space, part.to_head[i])
            vectors[i] = apply_motion_vectors(space, back, v)
    return vectors


def system_norm(part: ClusterPartition, vectors, space) -> float:
    return float(sum(geo.norm(space, vectors[h]) ** 2 for h in part.head))


def check_type_invariant(part: ClusterPartition, vectors, space,
                         tol: float = 1e-8) -> None:
    for b, block in enumerate(part.blocks):
        h = part.head[b]
        vh = vectors[h]
        for i in block:
            moved = apply_motion_vectors(space, part.to_head[i], vectors[i])
            if float(geo.norm(space, moved - vh)) > tol * max(1.0, float(
                    geo.norm(space, vh))):
                raise NotTypeInvariant(
                    f"endpoint {part.endpoints[i].label} breaks the cluster "
                    f"germ relation")


def first_variation(oc: OrderedCycle, vectors,
                    tau_merge: Optional[float] = None) -> float:
    """d Length / ds along the endpoint flow of a type-invariant system.

    Collected non-vanishing-terms formula: minus the sum over clusters of
    the inner product of the system with the descent vector, one endpoint
    per cluster.
    """
    rep = descent_vector(oc, tau_merge=tau_merge)
    space = oc.cycle.space
    check_type_invariant(rep.part, vectors, space)
    total = 0.0
    for h in rep.part.head:
        total -= float(geo.ambient_dot(space, vectors[h], rep.vectors[h]))
    return total


# ---------------------------------------------------------------------------
# the descent step
# ---------------------------------------------------------------------------

def max_step(oc: OrderedCycle, report: DescentReport,
             grow_cap: Optional[float] = None) -> float:
    """Largest safe step for the frozen descent field.

    Three caps: segments stay under delta/2; distinct clusters never
    collide within one step; and no endpoint travels more than a quarter
    of the local segment scale (the discrete smoothing-stability bound --
    bigger moves feed sawteeth back into the corner defects).
    """
    c = oc.cycle
    model = c.model
    cap = grow_cap if grow_cap is not None else model.delta / 2
    lens = c.segment_lengths()
    space = c.space
    block = report.part.block_of()
    mags = geo.norm(space, np.asarray(report.vectors))
    vmax = float(np.max(mags))
    tau = np.inf
    pos = lens[lens > 1e-12]
    if vmax > 1e-14 and len(pos):
        tau = 0.25 * float(np.median(pos)) / vmax
    li, ri = _segment_ep_indices(c)
    speed = mags[li] + mags[ri]
    act = speed > 1e-14
    room = cap - lens
    grow_ok = act & (room > 0)
    if grow_ok.any():
        tau = min(tau, float(np.min(room[grow_ok] / speed[grow_ok])))
    collide = act & (block[li] != block[ri])
    if collide.any():
        # do not let distinct clusters collide within one step
        tau = min(tau, float(np.min(0.25 * lens[collide] / speed[collide])))
    return float(tau if np.isfinite(tau) else 1.0)


def _seg_left_ep(c: GCycle, s: int) -> int:
    N = c.n_half
    if s == 0:
        return 0
    if s == N:
        return N + 1
    return s if s < N else s + 1


def _seg_right_ep(c: GCycle, s: int) -> int:
    N, M = c.n_half, c.m
    p = s + 1
    if p == N:
        return N
    if p == M:
        return M + 1
    return p if p < N else p + 1


def _endpoint_bases(c: GCycle):
    """Batched endpoint base points: (E, d) aligned with _endpoint_table."""
    ends = c.ends()
    N = c.n_half
    return np.concatenate([
        c.start[0][None], ends[0:N - 1], ends[N - 1][None],
        c.start[N][None], ends[N:c.m - 1], ends[c.m - 1][None]])


def _segment_ep_indices(c: GCycle):
    m = c.m
    li = np.array([_seg_left_ep(c, s) for s in range(m)])
    ri = np.array([_seg_right_ep(c, s) for s in range(m)])
    return li, ri


def flow_endpoints(oc: OrderedCycle, vectors, tau: float) -> OrderedCycle:
    """Move endpoints by exp(tau v) and rejoin with minimizing arcs.

    The vector system must be type-invariant so merged endpoints move
    coherently; junction motions are untouched because the flow commutes
    with the groupoid.  Segments whose moved arcs leave their chart ball
    are re-hosted afterwards.
    """
    c = oc.cycle
    model, space = c.model, c.space
    bases = _endpoint_bases(c)
    V = np.asarray(vectors, dtype=float)
    # keep flowed points exactly on the model quadric: the flow is iterated
    # thousands of times and off-surface drift amplifies geometrically
    moved = geo.project_to_surface(space, bexp(space, bases, tau * V))
    m, N = c.m, c.n_half
    li, ri = _segment_ep_indices(c)
    left = moved[li].copy()
    # junction endpoints live in the left segment's coordinates: map across
    segs = np.arange(m)
    need = (segs >= 1) & (segs != N)
    if need.any():
        idx = segs[need]
        inv = motion_inverse(space, c.junc[idx - 1])
        left[need] = apply_motion_points(space, inv, left[need])
    right = moved[ri]
    widths = c.widths()
    pos = widths > 1e-15
    vel = np.zeros_like(c.vel)
    if pos.any():
        vel[pos] = blog(space, left[pos], right[pos]) / widths[pos][:, None]
    if (~pos).any():
        gap = bdist(space, left[~pos], right[~pos])
        if np.any(gap > 1e-7 * max(1.0, space.scale)):
            raise StepTooLarge("zero-width segment pulled apart")
    out = replace(c, start=left, vel=vel)
    out = _rehost_where_needed(out)
    return OrderedCycle(out, oc.breaks.copy())


def _rehost_where_needed(c: GCycle) -> OrderedCycle:
    from .cycles import move_segments
    model, space = c.model, c.space
    ends = c.ends()
    centers = np.stack([model.charts[int(i)].center for i in c.chart])
    radii = np.array([model.charts[int(i)].radius for i in c.chart])
    d = np.maximum(bdist(space, c.start, centers), bdist(space, ends, centers))
    bad = np.nonzero(d > radii - 1e-12)[0]
    if len(bad) == 0:
        return c
    boundary = set(c.boundary_segments())
    singles = [int(s) for s in bad if s not in boundary]
    for s in singles:
        c = move_segments(c, [s], _I3)
    if any(int(s) in boundary for s in bad):
        c = move_segments(c, sorted(boundary), _I3, rigid=sorted(boundary))
    return c


def descent_step(oc: OrderedCycle, tau: float,
                 tau_merge: Optional[float] = None,
                 report: Optional[DescentReport] = None,
                 enforce_type: bool = True) -> Tuple[OrderedCycle, DescentReport]:
    """One frozen-field descent step of size tau.

    Requires small segments (<= delta/4, the safe rejoining regime); caps
    tau at the structural maximum; verifies that the cluster partition is
    unchanged when ``enforce_type`` is set (raising StepTooLarge lets the
    caller backtrack).
    """
    c = oc.cycle
    model = c.model
    if np.max(c.segment_lengths()) > model.delta / 4 + 1e-9:
        raise NotInLittleG("descent needs segments <= delta/4")
    rep = report or descent_vector(oc, tau_merge=tau_merge)
    tau = min(float(tau), max_step(oc, rep))
    out = flow_endpoints(oc, rep.vectors, tau)
    if enforce_type:
        part2 = clusters(out, tau_merge=tau_merge, require_small=False)
        if not rep.part.same_partition(part2):
            raise StepTooLarge("descent step changed the cluster partition")
    return out, rep


# ---------------------------------------------------------------------------
# stability and extraction
# ---------------------------------------------------------------------------

def _half_loop_path(c: GCycle, half: int):
    from .cycles import GPath
    lo, hi = (0, c.n_half) if half == 0 else (c.n_half, c.m)
    return GPath(c.model, c.t[lo:hi + 1].copy(), c.start[lo:hi].copy(),
                 c.vel[lo:hi].copy(), c.chart[lo:hi].copy(),
                 c.junc[lo:hi - 1].copy() if hi - lo > 1
                 else np.zeros((0, 3, 3)))


def _boundary_units(c: GCycle):
    """(e1, en, en1, em): unit velocities at 0+, 1-, 1+, 2- in basepoint coords."""
    space = c.space
    N, M = c.n_half, c.m
    lens = c.segment_lengths()

    def first_unit(lo, hi):
        for s in range(lo, hi):
            if lens[s] > 1e-13:
                g = _chain(c, lo, s)
                return apply_motion_vectors(space, g, _initial_unit(c, s))
        return np.zeros(space.dim)

    def last_unit(lo, hi):
        for s in range(hi - 1, lo - 1, -1):
            if lens[s] > 1e-13:
                g = _chain(c, s, hi - 1)
                return apply_motion_vectors(
                    space, motion_inverse(space, g), _terminal_unit(c, s))
        return np.zeros(space.dim)

    e1 = first_unit(0, N)
    en = last_unit(0, N)
    en1 = first_unit(N, M)
    em = last_unit(N, M)
    return e1, en, en1, em


def angle_defects(c: GCycle, include_boundary: bool = True):
    """Per-junction geodesicity defects: unit-tangent gap plus speed gap."""
    space = c.space
    N, M = c.n_half, c.m
    lens = c.segment_lengths()
    speeds = c.speeds()
    defects = []

    def junction_defect(sl, sr, g):
        if lens[sl] < 1e-13 or lens[sr] < 1e-13:
            return float(lens[sl] + lens[sr]) * 0.0
        u_in = _terminal_unit(c, sl)
        u_out = apply_motion_vectors(space, g, _initial_unit(c, sr))
        gap = float(geo.norm(space, u_in - u_out))
        sgap = abs(float(speeds[sl]) - float(speeds[sr])) / max(
            float(speeds[sl]), 1e-300)
        return gap + sgap

    for j in range(M - 1):
        if j == c.middle_junction() and c.kind is not CycleKind.SINGLE_LOOP:
            continue
        defects.append(junction_defect(j, j + 1, c.junc[j]))
    if include_boundary:
        if c.kind is CycleKind.TWO_LOOPS:
            for lo, hi in ((0, N), (N, M)):
                if float(np.sum(lens[lo:hi])) > 1e-13:
                    defects.append(junction_defect(hi - 1, lo, _I3))
        elif c.kind is CycleKind.SINGLE_LOOP:
            defects.append(junction_defect(M - 1, 0, _I3))
    return np.array(defects) if defects else np.zeros(0)


def stability_test(c: GCycle, tol: float = 1e-8):
    """('stable', 0.0) or ('unstable', measure) per the kind rules.

    Pairs of loops and long loops must be geodesic everywhere; a
    figure-eight must be geodesic away from its two junction parameters
    with the four boundary unit vectors cancelling as
    e(0+) - e(2-) - e(1-) + e(1+) = 0.
    """
    defects = angle_defects(c, include_boundary=c.kind is not
                            CycleKind.FIGURE_EIGHT)
    measure = float(np.sum(defects ** 2))
    if c.kind is CycleKind.FIGURE_EIGHT:
        e1, en, en1, em = _boundary_units(c)
        four = e1 - em - en + en1
        measure += float(geo.norm(c.space, four)) ** 2
    if measure < tol:
        return "stable", 0.0
    return "unstable", measure


def extract_geodesic(c: GCycle, tol: float = 1e-8) -> GCycle:
    """Closed geodesic carried by a stable cycle.

    Two loops: the longer loop, reparametrized over [0,2].  Long loop: the
    cycle itself.  Figure-eight: the dichotomy on the boundary unit
    vectors; the pass-through pattern rescales the first half and reads
    the long-loop splitting, the reflection pattern concatenates the first
    half with the backtracked second half (falling back to the longer half
    when the concatenation fails to be geodesic, which still carries a
    closed geodesic of no greater length).
    """
    if c.length() < 1e-12:
        raise TrivialCycle("zero-length cycle carries no geodesic")
    # normalize the parametrization first: stability compares speeds across
    # junctions, and descent output is unevenly parametrized
    if c.kind is CycleKind.SINGLE_LOOP:
        c = _path_to_long_cycle(c.model, _whole_cycle_path(c))
    else:
        c = constant_speed_of(c)
    state, _ = stability_test(c, tol)
    if state != "stable":
        raise NotStable("cycle is not stable")
    lens = c.segment_lengths()
    N = c.n_half
    half_len = (float(np.sum(lens[:N])), float(np.sum(lens[N:])))
    if c.kind is CycleKind.TWO_LOOPS:
        half = 0 if half_len[0] >= half_len[1] else 1
        return _loop_as_long_cycle(c, half)
    if c.kind is CycleKind.SINGLE_LOOP:
        return c
    # figure-eight dichotomy
    if min(half_len) < 1e-12:
        return _loop_as_long_cycle(c, 0 if half_len[0] > half_len[1] else 1)
    e1, en, en1, em = _boundary_units(c)
    space = c.space
    branch1 = float(geo.norm(space, e1 - em)) + float(geo.norm(space, en - en1))
    branch2 = float(geo.norm(space, e1 - en)) + float(geo.norm(space, en1 - em))
    from .cycles import split_figure8
    if branch1 <= branch2:
        # pass-through: global rescaling of the long-loop splitting
        return _path_to_long_cycle(c.model,
                                   _whole_cycle_path(split_figure8(c, "p2")))
    # reflection pattern: first half plus the backtracked second half
    from .cycles import GPath
    h0 = _half_loop_path(c, 0)
    h1 = _half_loop_path(c, 1).reversed()
    h1 = h1.reparametrized(1.0, 2.0)
    joined = GPath(c.model, np.concatenate([h0.t, h1.t[1:]]),
                   np.concatenate([h0.start, h1.start]),
                   np.concatenate([h0.vel, h1.vel]),
                   np.concatenate([h0.chart, h1.chart]),
                   np.concatenate([h0.junc, [_I3], h1.junc], axis=0))
    cand = _path_to_long_cycle(c.model, joined)
    if stability_test(cand, max(tol, 1e-7))[0] == "stable":
        return cand
    return _loop_as_long_cycle(c, 0 if half_len[0] >= half_len[1] else 1)


def _path_to_long_cycle(model, path) -> GCycle:
    """Arc-length parametrize a closed path over [0,2] and split at 1.0.

    Global constant speed: unlike the per-half reparametrization this
    equalizes the speed across the half boundary, which is what a closed
    geodesic needs.
    """
    space = model.space
    if path.length() <= 0:
        raise TrivialCycle("constant loop")
    lens = geo.norm(space, path.vel) * np.diff(path.t)
    keep = lens > 1e-14
    t_new = np.concatenate([[0.0], 2.0 * np.cumsum(lens) / float(np.sum(lens))])
    t_new[-1] = 2.0
    start, vel, chart = [], [], []
    junc = []
    speed = float(np.sum(lens)) / 2.0
    prev_kept = None
    knots = [0.0]
    for s in range(path.m):
        if not keep[s]:
            continue
        if prev_kept is not None:
            g = _I3
            for j in range(prev_kept, s):
                g = g @ path.junc[j]
            junc.append(g)
        w = t_new[s + 1] - t_new[s]
        start.append(path.start[s])
        vel.append(path.vel[s] * ((path.t[s + 1] - path.t[s]) / w))
        chart.append(int(path.chart[s]))
        knots.append(float(t_new[s + 1]))
        prev_kept = s
    t = np.array(knots)
    t[-1] = 2.0
    start = np.stack(start)
    vel = np.stack(vel)
    chart = np.array(chart, dtype=int)
    junc = np.stack(junc) if junc else np.zeros((0, 3, 3))
    k = int(np.argmin(np.abs(t - 1.0)))
    if abs(t[k] - 1.0) > 1e-13:
        j = int(np.searchsorted(t, 1.0)) - 1
        mid = bexp(space, start[j], (1.0 - t[j]) * vel[j])
        vmid = btransport(space, start[j], (1.0 - t[j]) * vel[j], vel[j])
        t = np.insert(t, j + 1, 1.0)
        start = np.insert(start, j + 1, mid, axis=0)
        vel = np.insert(vel, j + 1, vmid, axis=0)
        chart = np.insert(chart, j + 1, chart[j])
        junc = np.insert(junc, j, _I3, axis=0)
        k = j + 1
    return GCycle(model, CycleKind.SINGLE_LOOP, k, t, start, vel, chart, junc)


def _loop_as_long_cycle(c: GCycle, half: int) -> GCycle:
    return _path_to_long_cycle(c.model, _half_loop_path(c, half))


def _whole_cycle_path(c: GCycle):
    """The two halves of a long loop as one path (middle junction literal)."""
    from .cycles import GPath
    h0 = _half_loop_path(c, 0)
    h1 = _half_loop_path(c, 1)
    return GPath(c.model, np.concatenate([h0.t, h1.t[1:]]),
                 np.concatenate([h0.start, h1.start]),
                 np.concatenate([h0.vel, h1.vel]),
                 np.concatenate([h0.chart, h1.chart]),
                 np.concatenate([h0.junc, [_I3], h1.junc], axis=0))


# ---------------------------------------------------------------------------
# type partial order
# ---------------------------------------------------------------------------

def type_order(a: ClusterPartition, b: ClusterPartition) -> str:
    """'equal', 'higher', 'lower' or 'incomparable' (a relative to b).

    A figure-eight type sits above two-loop and long-loop types; within
    matching kinds the order is refinement of the zero-length pattern
    (more collapsed segments = higher).
    """
    if len(a.zero_pattern) != len(b.zero_pattern):
        raise DescentError("type order needs equal break numbers")
    if a.signature() == b.signature():
        return "equal"
    f8 = CycleKind.FIGURE_EIGHT
    za, zb = np.array(a.zero_pattern), np.array(b.zero_pattern)
    a_ge = bool(np.all(zb <= za))   # zeros of b contained in zeros of a
    b_ge = bool(np.all(za <= zb))
    kind_a_above = a.kind is f8 and b.kind is not f8
    kind_b_above = b.kind is f8 and a.kind is not f8
    if (a_ge and not kind_b_above) or (kind_a_above and a_ge):
        if kind_a_above or np.any(za & ~zb):
            return "higher"
    if (b_ge and not kind_a_above) or (kind_b_above and b_ge):
        if kind_b_above or np.any(zb & ~za):
            return "lower"
    return "incomparable"
