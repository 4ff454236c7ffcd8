"""Orbifold models: atlases of convex metric-ball charts plus a germ groupoid.

A model here is a developable quotient ``M / G``: the constant-curvature
model surface ``M`` acted on by a discrete group of isometries ``G``
(trivial for the round sphere, cyclic for spindles, a rotation group
generated at polygon corners for doubled polygons).  Charts are metric
balls ``B(c_i, r_i)`` in ``M`` small enough that any self-overlap
``g B_i of B_i`` comes from the stabilizer of the center; change-of-chart
germs are elements of ``G`` restricted to the overlap lens of two chart
balls.  Because every germ motion is a global isometry, the quotient
distance is an exact minimum over enumerated group elements and all germ
bookkeeping reduces to matrix stacks.

The covering margin ``delta`` (the Lebesgue number of the chart images,
times a 0.9 safety factor) controls every mesh size downstream: any
metric ball of radius ``delta`` in the quotient lifts into a single chart
ball with room to spare.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from . import geometry as geo
from .config import DEFAULT_TOL, Tolerances
from .errors import (ChartPlacementError, DegenerateModel, IncompatibleGerms,
                     InvalidSpec, NoGermAvailable, UnknownChart)
from .geometry import (Isometry, ModelSpace, apply_motion_points, bdist, bexp,
                       blog, motion_inverse)


class OrbifoldPoint(NamedTuple):
    chart: int
    position: np.ndarray


@dataclass(frozen=True)
class Chart:
    id: int
    space: ModelSpace
    center: np.ndarray
    radius: float
    local_group: tuple = ()      # Isometry list fixing the center

    def contains(self, x: np.ndarray, margin: float = 0.0) -> bool:
        return float(bdist(self.space, self.center, x)) <= self.radius - margin

    @property
    def order(self) -> int:
        return len(self.local_group) + 1


@dataclass(frozen=True)
class GroupoidGerm:
    source_chart: int
    target_chart: int
    motion: Isometry
    domain_center: np.ndarray
    domain_radius: float

    def inverse_data(self):
        inv = self.motion.inverse()
        return (self.target_chart, self.source_chart, inv,
                self.motion.point(self.domain_center), self.domain_radius)


@dataclass
class SingularPoint:
    chart: int
    position: np.ndarray
    order: int


class OrbifoldModel:
    """Immutable after construction; all queries are read-only."""

    def __init__(self, label: str, space: ModelSpace, charts: List[Chart],
                 group: np.ndarray, singular: List[SingularPoint],
                 spec: dict, area: float, mirror_group: Optional[np.ndarray] = None,
                 tol: Tolerances = DEFAULT_TOL, delta: Optional[float] = None,
                 region_samples: Optional[np.ndarray] = None):
        self.label = label
        self.space = space
        self.charts = charts
        self.group = group                      # (K, 3, 3) motions, id first
        self.singular_points = singular
        self.spec = spec
        self.area = area
        self.tol = tol
        self._mirror_group = mirror_group
        self._region_samples = region_samples
        self._build_germ_tables()
        self.delta = delta if delta is not None else self._sampled_delta()
        if self.delta <= 0:
            raise DegenerateModel(f"{label}: chart cover has no positive margin")

    # -- construction internals ------------------------------------------

    def _build_germ_tables(self):
        """Every (i, j, g) with g B_i meeting B_j becomes a germ."""
        space = self.space
        centers = np.stack([c.center for c in self.charts])
        radii = np.array([c.radius for c in self.charts])
        germs: List[GroupoidGerm] = []
        by_source = {}
        for i, ch in enumerate(self.charts):
            img = apply_motion_points(space, self.group, ch.center)  # (K, d)
            mots, tgts = [], []
            for j in range(len(self.charts)):
                d = bdist(space, img, centers[j])
                hit = np.nonzero(d < ch.radius + radii[j] - 1e-12)[0]
                for k in hit:
                    mots.append(self.group[k])
                    tgts.append(j)
                    germs.append(self._make_germ(i, j, self.group[k],
                                                 float(d[k]), radii[j]))
            by_source[i] = (np.stack(mots) if mots else np.zeros((0, 3, 3)),
                            np.array(tgts, dtype=int))
        self.germs = germs
        self._germs_by_source = by_source

    def _make_germ(self, i, j, motion, dist_ij, rj) -> GroupoidGerm:
        ch = self.charts[i]
        rho = min(ch.radius, rj, (ch.radius + rj - dist_ij) / 2.0)
        if dist_ij < 1e-12:
            dc = ch.center
        else:
            back = apply_motion_points(self.space, motion_inverse(self.space, motion),
                                       self.charts[j].center)
            t = np.clip((dist_ij + ch.radius - rj) / 2.0 / dist_ij, 0.0, 1.0)
            dc = geo.interpolate(self.space, ch.center, back, t)
        return GroupoidGerm(i, j, Isometry(self.space, motion.copy()), dc,
                            max(rho, 0.0))

    def _sampled_delta(self) -> float:
        xs = self.region_samples()
        margin = self._cover_margins(xs)
        return self.tol.delta_safety * float(np.min(margin))

    def _cover_margins(self, xs: np.ndarray) -> np.ndarray:
        """max over charts/group of (r_j - d(g x, c_j)) for each sample."""
        best = np.full(len(xs), -np.inf)
        for j, ch in enumerate(self.charts):
            # d(g x, c_j) = d(x, g^-1 c_j): precompute group preimages of c_j
            pre = apply_motion_points(self.space,
                                      motion_inverse(self.space, self.group),
                                      ch.center)  # (K, d)
            d = bdist(self.space, xs[:, None, :], pre[None, :, :])  # (n, K)
            best = np.maximum(best, ch.radius - d.min(axis=1))
        return best

    def region_samples(self) -> np.ndarray:
        if self._region_samples is None:
            raise DegenerateModel("model built without region samples")
        return self._region_samples

    # -- public queries -----------------------------------------------------

    def chart(self, chart_id: int) -> Chart:
        if not 0 <= chart_id < len(self.charts):
            raise UnknownChart(f"chart {chart_id}")
        return self.charts[chart_id]

    def check_point(self, p: OrbifoldPoint, margin: float = 0.0) -> None:
        ch = self.chart(p.chart)
        if not ch.contains(p.position, margin):
            raise UnknownChart(f"position outside chart {p.chart} ball")

    def germs_from(self, chart_id: int):
        self.chart(chart_id)
        return self._germs_by_source[chart_id]

    def locate(self, p: OrbifoldPoint, target_chart: int) -> List[OrbifoldPoint]:
        """All germ-images of ``p`` that land inside the target chart ball."""
        self.check_point(p)
        tch = self.chart(target_chart)
        mots, tgts = self.germs_from(p.chart)
        sel = tgts == target_chart
        if not sel.any():
            return []
        img = apply_motion_points(self.space, mots[sel], p.position)
        keep = bdist(self.space, img, tch.center) < tch.radius - 1e-12
        img = img[keep]
        out: List[OrbifoldPoint] = []
        tol = 10 * self.tol.tau_match(self.delta)
        for x in img:
            if not any(float(bdist(self.space, x, q.position)) < tol for q in out):
                out.append(OrbifoldPoint(target_chart, x))
        return out

    def local_group(self, p: OrbifoldPoint):
        """(order, generators): stabilizer of ``p`` in the germ motions."""
        self.check_point(p)
        mots, tgts = self.germs_from(p.chart)
        sel = tgts == p.chart
        img = apply_motion_points(self.space, mots[sel], p.position)
        fix = bdist(self.space, img, p.position) < 10 * self.tol.tau_match(self.delta)
        kept = []
        for m in mots[sel][fix]:
            iso = Isometry(self.space, m)
            if not iso.is_identity(1e-9 * max(1.0, self.space.scale)):
                if not any(np.max(np.abs(m - k.matrix)) < 1e-9 for k in kept):
                    kept.append(iso)
        return len(kept) + 1, kept

    def germ_between(self, p: OrbifoldPoint, source_chart: int,
                     target_chart: int) -> List[GroupoidGerm]:
        if p.chart != source_chart:
            raise UnknownChart("point not expressed in the source chart")
        self.check_point(p)
        tch = self.chart(target_chart)
        out = []
        for g in self.germs:
            if g.source_chart != source_chart or g.target_chart != target_chart:
                continue
            img = g.motion.point(p.position)
            if float(bdist(self.space, img, tch.center)) < tch.radius - 1e-12:
                if not any(float(bdist(self.space, img, h.motion.point(p.position)))
                           < 10 * self.tol.tau_match(self.delta) and
                           np.max(np.abs(g.motion.matrix - h.motion.matrix)) < 1e-9
                           for h in out):
                    out.append(g)
        if not out:
            raise NoGermAvailable(
                f"no germ from chart {source_chart} to {target_chart} at this point")
        return out

    def compose_germs(self, g1: GroupoidGerm, g2: GroupoidGerm) -> GroupoidGerm:
        """g1 after g2; the domain is the largest ball where both apply."""
        if g1.source_chart != g2.target_chart:
            raise IncompatibleGerms("source of g1 must equal target of g2")
        motion = g1.motion @ g2.motion
        # domain: x in dom(g2) with g2 x in dom(g1)
        back = g2.motion.inverse().point(g1.domain_center)
        d = float(bdist(self.space, g2.domain_center, back))
        rho = min(g2.domain_radius, g1.domain_radius,
                  (g2.domain_radius + g1.domain_radius - d) / 2.0)
        if rho <= 0:
            raise IncompatibleGerms("germ domains do not overlap")
        t = np.clip((d + g2.domain_radius - g1.domain_radius) / 2.0 / max(d, 1e-300),
                    0.0, 1.0)
        dc = geo.interpolate(self.space, g2.domain_center, back, t) if d > 1e-12 \
            else g2.domain_center
        return GroupoidGerm(g2.source_chart, g1.target_chart, motion, dc, rho)

    def lebesgue_delta(self) -> float:
        return self.delta

    def quotient_distance(self, a: OrbifoldPoint, b: OrbifoldPoint) -> float:
        """Exact distance on the quotient: min over group of d(a, g b).

        Both arguments are folded into chart-hosted representatives first so
        that the answer is invariant under replacing either by any orbit
        image the enumerated group can reach.
        """
        return self.quotient_distance_witness(a, b)[0]

    def orbit_distance(self, a_pos: np.ndarray, b_pos: np.ndarray) -> float:
        """min over the group of d(a, g b) without re-folding the arguments.

        Correct whenever both positions already lie inside chart balls
        (which is where all cycle data lives); cheaper than the folding
        variant on hot paths.
        """
        img = apply_motion_points(self.space, self.group, b_pos)
        return float(np.min(bdist(self.space, a_pos, img)))

    def quotient_distance_witness(self, a: OrbifoldPoint, b: OrbifoldPoint):
        """(distance, lift of a, image of b realizing the minimum)."""
        fa = self.fold_to_chart(a.position)
        fb = self.fold_to_chart(b.position)
        pa = a.position if fa is None else fa[1]
        pb = b.position if fb is None else fb[1]
        img = apply_motion_points(self.space, self.group, pb)
        d = bdist(self.space, pa, img)
        k = int(np.argmin(d))
        return float(d[k]), pa, img[k]

    def orbit_images(self, position: np.ndarray) -> np.ndarray:
        return apply_motion_points(self.space, self.group, position)

    def singular_distance(self, position: np.ndarray) -> float:
        """Min quotient distance from a position to the singular set."""
        best = np.inf
        for s in self.singular_points:
            img = apply_motion_points(self.space, self.group, s.position)
            best = min(best, float(np.min(bdist(self.space, position, img))))
        return best

    def clearance(self) -> float:
        """Largest distance-to-singular-set over the sampled region."""
        if not self.singular_points:
            return np.inf
        xs = self.region_samples()
        sing = np.concatenate([apply_motion_points(self.space, self.group, s.position)
                               for s in self.singular_points])
        d = bdist(self.space, xs[:, None, :], sing[None, :, :]).min(axis=1)
        return float(np.max(d))

    def place_arc(self, chart_id: int, x: np.ndarray, length: float):
        """Find (motion matrix, target chart) hosting a length-``length`` arc at x.

        Among germs from ``chart_id`` whose image of ``x`` sits at depth
        ``length`` inside the target ball, picks the target center nearest
        the image (deterministic placement rule).  The identity germ to the
        own chart participates like any other.
        """
        mots, tgts = self.germs_from(chart_id)
        if len(mots) == 0:
            raise ChartPlacementError("chart has no germs (broken atlas)")
        img = apply_motion_points(self.space, mots, x)
        centers = np.stack([self.charts[t].center for t in tgts])
        radii = np.array([self.charts[t].radius for t in tgts])
        d = bdist(self.space, img, centers)
        ok = d <= radii - length
        if not ok.any():
            raise ChartPlacementError(
                f"no chart hosts an arc of length {length:.3g} at this point "
                f"(delta = {self.delta:.3g})")
        cand = np.nonzero(ok)[0]
        k = cand[int(np.argmin(d[cand]))]
        return mots[k], int(tgts[k])

    def mirror_group(self) -> np.ndarray:
        if self._mirror_group is None:
            raise InvalidSpec(f"{self.label} has no mirror (doubled) structure")
        return self._mirror_group

    def random_regular_point(self, rng: np.random.Generator,
                             min_singular_dist: float = 0.0) -> OrbifoldPoint:
        xs = self.region_samples()
        for _ in range(1000):
            x = xs[rng.integers(len(xs))]
            if min_singular_dist and self.singular_distance(x) < min_singular_dist:
                continue
            hosted = self.fold_to_chart(x)
            if hosted is not None:
                p = OrbifoldPoint(hosted[0], hosted[1])
                order, _ = self.local_group(p)
                if order == 1:
                    return p
        raise DegenerateModel("could not sample a regular point")

    def _host_chart(self, x: np.ndarray, margin: float = 0.0):
        """Chart containing some group image of x, nearest-center rule.

        Returns (chart_id) after replacing x by that image; use
        ``fold_to_chart`` when the image itself is needed.
        """
        got = self.fold_to_chart(x, margin)
        return None if got is None else got[0]

    def fold_to_chart(self, x: np.ndarray, margin: float = 0.0):
        """(chart_id, image, motion) hosting some orbit image of x at depth
        ``margin``; nearest-center rule; None when nothing fits."""
        best = None
        for j, ch in enumerate(self.charts):
            pre = apply_motion_points(self.space,
                                      motion_inverse(self.space, self.group),
                                      ch.center)
            d = bdist(self.space, x, pre)
            k = int(np.argmin(d))
            m = ch.radius - margin - float(d[k])
            if m > 0 and (best is None or float(d[k]) < best[3]):
                img = apply_motion_points(self.space, self.group[k], x)
                best = (j, img, self.group[k], float(d[k]))
        if best is None:
            return None
        return best[0], best[1], best[2]

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "curvature": self.space.curvature_sign,
            "scale": self.space.scale,
            "spec": self.spec,
            "area": self.area,
            "delta": self.delta,
            "charts": [{
                "id": c.id,
                "center": c.center.tolist(),
                "radius": c.radius,
                "local_group": [g.matrix.tolist() for g in c.local_group],
            } for c in self.charts],
            "germs": [{
                "source": g.source_chart,
                "target": g.target_chart,
                "motion": g.motion.matrix.tolist(),
                "domain_center": g.domain_center.tolist(),
                "domain_radius": g.domain_radius,
            } for g in self.germs],
            "singular_points": [{
                "chart": s.chart, "position": s.position.tolist(), "order": s.order,
            } for s in self.singular_points],
            "group": [m.tolist() for m in self.group],
            "mirror_group": None if self._mirror_group is None
                            else [m.tolist() for m in self._mirror_group],
            "region_samples": self._region_samples.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "OrbifoldModel":
        space = ModelSpace(int(d["curvature"]), float(d["scale"]))
        charts = [Chart(c["id"], space, np.array(c["center"]), float(c["radius"]),
                        tuple(Isometry(space, np.array(m)) for m in c["local_group"]))
                  for c in d["charts"]]
        singular = [SingularPoint(s["chart"], np.array(s["position"]), int(s["order"]))
                    for s in d["singular_points"]]
        group = np.array(d["group"])
        mirror = None if d.get("mirror_group") is None else np.array(d["mirror_group"])
        return OrbifoldModel(d["label"], space, charts, group, singular,
                             d["spec"], float(d["area"]), mirror_group=mirror,
                             delta=float(d["delta"]),
                             region_samples=np.array(d["region_samples"]))


# ---------------------------------------------------------------------------
# group enumeration
# ---------------------------------------------------------------------------

def _probes(space: ModelSpace, anchor: np.ndarray) -> np.ndarray:
    offs = [np.zeros(space.dim)]
    if space.curvature_sign == 0:
        offs += [np.array([0.31, 0.07]), np.array([-0.11, 0.23])]
        return np.stack([anchor + o for o in offs])
    rng = np.random.default_rng(7)
    pts = [anchor]
    for _ in range(2):
        v = geo.random_tangent(space, anchor, rng, 0.3 * space.scale)
        pts.append(bexp(space, anchor, v))
    return np.stack(pts)


def enumerate_group(space: ModelSpace, generators: Sequence[Isometry],
                    anchor: np.ndarray, radius: float,
                    max_elements: int = 20000, route_margin: float = 1.35) -> np.ndarray:
    """BFS closure of the generators within a displacement bound.

    Keeps every element g with d(g . anchor, anchor) <= radius; the result
    always contains inverses of its members (generator set is symmetrized).
    Identity occupies index 0.
    """
    probes = _probes(space, anchor)
    gens = []
    for g in generators:
        gens.append(g.matrix)
        gens.append(g.inverse().matrix)
    elements = [np.eye(3)]
    fps = [geo.motion_fingerprint(space, np.eye(3), probes).ravel()]
    frontier = [np.eye(3)]
    scale = max(1.0, space.scale)
    while frontier:
        new_frontier = []
        for m in frontier:
            for g in gens:
                cand = geo.renormalize_motion(space, g @ m)
                img = apply_motion_points(space, cand, anchor)
                # route through a slightly larger ball so that every element
                # within the requested radius is reachable by the BFS
                if float(bdist(space, img, anchor)) > radius * route_margin:
                    continue
                fp = geo.motion_fingerprint(space, cand, probes).ravel()
                arr = np.stack(fps)
                if np.min(np.max(np.abs(arr - fp), axis=1)) < 1e-7 * scale:
                    continue
                elements.append(cand)
                fps.append(fp)
                new_frontier.append(cand)
                if len(elements) > max_elements:
                    raise DegenerateModel("group enumeration exploded")
        frontier = new_frontier
    return np.stack(elements)


def _displacement(space, group, x, tol) -> float:
    img = apply_motion_points(space, group, x)
    d = bdist(space, x, img)
    moved = d[d > tol]
    return float(np.min(moved)) if len(moved) else np.inf


# ---------------------------------------------------------------------------
# cover construction
# ---------------------------------------------------------------------------

def _greedy_cover(space, group, samples, seeds, radius_cap, tol_disp,
                  frac=0.45, strict=0.75):
    """Chart (center, radius) list covering every sample at depth strict*r.

    Starts from the seed charts and adds balls at uncovered samples, radius
    limited by half the displacement under the group (so each ball embeds
    into the quotient) and by the convexity cap.
    """
    centers = [s[0] for s in seeds]
    radii = [s[1] for s in seeds]

    def covered():
        cov = np.zeros(len(samples), dtype=bool)
        inv = motion_inverse(space, group)
        for c, r in zip(centers, radii):
            pre = apply_motion_points(space, inv, c)
            d = bdist(space, samples[:, None, :], pre[None, :, :]).min(axis=1)
            cov |= d < strict * r
        return cov

    for _ in range(4000):
        cov = covered()
        if cov.all():
            break
        idx = np.nonzero(~cov)[0]
        x = samples[idx[0]]
        disp = _displacement(space, group, x, tol_disp)
        r = min(frac * disp, radius_cap)
        if r <= tol_disp:
            raise DegenerateModel("cannot cover region: displacement too small")
        centers.append(x)
        radii.append(r)
    else:
        raise DegenerateModel("cover construction did not terminate")
    return centers, radii
def _finish_model(label, space, group, centers, radii, singular_positions,
                  spec, area, samples, mirror_group=None,
                  tol: Tolerances = DEFAULT_TOL) -> OrbifoldModel:
    charts = []
    for i, (c, r) in enumerate(zip(centers, radii)):
        # local group: motions fixing the center
        img = apply_motion_points(space, group, c)
        fix = bdist(space, img, c) < 1e-9 * max(1.0, space.scale)
        local = []
        for m in group[fix]:
            iso = Isometry(space, m)
            if not iso.is_identity(1e-9 * max(1.0, space.scale)):
                local.append(iso)
        charts.append(Chart(i, space, np.asarray(c, float), float(r), tuple(local)))
    singular = []
    for pos, order in singular_positions:
        hosted = None
        for ch in charts:
            img = apply_motion_points(space, group, pos)
            d = bdist(space, img, ch.center)
            k = int(np.argmin(d))
            if d[k] < ch.radius - 1e-9:
                hosted = (ch.id, img[k])
                break
        if hosted is None:
            raise DegenerateModel("singular point not covered by any chart")
        singular.append(SingularPoint(hosted[0], hosted[1], order))
    return OrbifoldModel(label, space, charts, group, singular, spec, area,
                         mirror_group=mirror_group, tol=tol,
                         region_samples=np.asarray(samples, float))


# ---------------------------------------------------------------------------
# region sampling helpers
# ---------------------------------------------------------------------------

def _fibonacci_sphere(space: ModelSpace, n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * i / n)
    theta = np.pi * (1 + 5 ** 0.5) * i
    pts = np.stack([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta),
                    np.cos(phi)], axis=1)
    return pts * space.scale


def _polygon_samples(space: ModelSpace, verts: np.ndarray, spacing: float,
                     mirror: Optional[Isometry]) -> np.ndarray:
    """Sample the (geodesic) polygon by fans from its incenter, plus the
    mirrored copy when a doubling reflection is supplied."""
    inc = _incenter(space, verts)
    pts = [inc]
    k = len(verts)
    for a in range(k):
        b = (a + 1) % k
        eab = float(bdist(space, verts[a], verts[b]))
        ne = max(2, int(np.ceil(eab / spacing)) + 1)
        for t in np.linspace(0.0, 1.0, ne):
            edge_pt = geo.interpolate(space, verts[a], verts[b], t)
            dr = float(bdist(space, inc, edge_pt))
            nr = max(2, int(np.ceil(dr / spacing)) + 1)
            for s in np.linspace(0.0, 1.0, nr)[1:]:
                pts.append(geo.interpolate(space, inc, edge_pt, s))
    pts = np.stack(pts)
    if mirror is not None:
        pts = np.concatenate([pts, apply_motion_points(space, mirror.matrix, pts)])
    return pts


def _incenter(space: ModelSpace, verts: np.ndarray) -> np.ndarray:
    """Vertex centroid projected to the surface; a cover seed, not exact."""
    c = np.mean(verts, axis=0)
    if space.curvature_sign != 0:
        c = geo.project_to_surface(space, c)
    return c


# ---------------------------------------------------------------------------
# canonical constructors
# ---------------------------------------------------------------------------

def _cap_radius_cap(space: ModelSpace, tol: Tolerances) -> float:
    if space.curvature_sign > 0:
        return space.convexity_radius - tol.cap_margin_factor * space.scale
    return np.inf


def round_sphere(radius: float = 1.0, tol: Tolerances = DEFAULT_TOL) -> OrbifoldModel:
    """Round sphere: six overlapping caps, trivial groupoid."""
    if radius <= 0:
        raise InvalidSpec("radius must be positive")
    space = geo.sphere(radius)
    r_cap = min(1.2 * radius, _cap_radius_cap(space, tol))
    centers = [radius * np.array(e) for e in
               np.concatenate([np.eye(3), -np.eye(3)])]
    group = np.eye(3)[None, :, :]
    samples = _fibonacci_sphere(space, 600)
    return _finish_model(f"sphere(R={radius:g})", space, group, centers,
                         [r_cap] * 6, [],
                         {"kind": "RoundSphere", "radius": radius},
                         4 * np.pi * radius ** 2, samples, tol=tol)


def sphere_quotient(radius: float, p: int,
                    tol: Tolerances = DEFAULT_TOL) -> OrbifoldModel:
    """Spindle: round sphere modulo the order-p rotation group about the poles."""
    if radius <= 0 or p < 2 or int(p) != p:
        raise InvalidSpec("need radius > 0 and integer p >= 2")
    space = geo.sphere(radius)
    axis = np.array([0.0, 0.0, radius])
    gens = [geo.sphere_rotation(space, axis, 2 * np.pi / p)]
    group = enumerate_group(space, gens, np.array([radius, 0.0, 0.0]),
                            radius * np.pi + 1.0)
    if len(group) != p:
        raise DegenerateModel(f"expected {p} rotations, enumerated {len(group)}")
    cap = _cap_radius_cap(space, tol)
    poles = [np.array([0.0, 0.0, radius]), np.array([0.0, 0.0, -radius])]
    seeds = [(poles[0], min(1.2 * radius, cap)), (poles[1], min(1.2 * radius, cap))]
    samples = _fibonacci_sphere(space, max(600, 300 * p))
    centers, radii = _greedy_cover(space, group, samples, seeds, cap,
                                   1e-9 * radius)
    return _finish_model(f"spindle(R={radius:g},p={p})", space, group, centers,
                         radii, [(poles[0], p), (poles[1], p)],
                         {"kind": "SphereQuotient", "radius": radius, "p": p},
                         4 * np.pi * radius ** 2 / p, samples, tol=tol)


def _triangle_vertices(space: ModelSpace, angles, side: float) -> np.ndarray:
    """Vertices of a geodesic triangle with the given interior angles.

    Flat triangles are scaled so edge AB has length ``side``; curved
    triangles are rigid (size fixed by the angles and the scale).
    """
    al, be, ga = angles
    if space.curvature_sign == 0:
        ta, tb = np.tan(al), np.tan(be)
        cx = side * tb / (ta + tb)
        cy = side * ta * tb / (ta + tb)
        return np.array([[0.0, 0.0], [side, 0.0], [cx, cy]])
    R = space.scale
    if space.curvature_sign > 0:
        cos_c = (np.cos(ga) + np.cos(al) * np.cos(be)) / (np.sin(al) * np.sin(be))
        cos_b = (np.cos(be) + np.cos(al) * np.cos(ga)) / (np.sin(al) * np.sin(ga))
        c = np.arccos(np.clip(cos_c, -1, 1))
        b = np.arccos(np.clip(cos_b, -1, 1))
        A = np.array([0.0, 0.0, 1.0])
        B = np.array([np.sin(c), 0.0, np.cos(c)])
        C = np.array([np.sin(b) * np.cos(al), np.sin(b) * np.sin(al), np.cos(b)])
        return R * np.stack([A, B, C])
    cosh_c = (np.cos(ga) + np.cos(al) * np.cos(be)) / (np.sin(al) * np.sin(be))
    cosh_b = (np.cos(be) + np.cos(al) * np.cos(ga)) / (np.sin(al) * np.sin(ga))
    c = np.arccosh(max(cosh_c, 1.0))
    b = np.arccosh(max(cosh_b, 1.0))
    A = np.array([0.0, 0.0, 1.0])
    B = np.array([np.sinh(c), 0.0, np.cosh(c)])
    C = np.array([np.sinh(b) * np.cos(al), np.sinh(b) * np.sin(al), np.cosh(b)])
    return space.scale * np.stack([A, B, C])


def _edge_reflection(space: ModelSpace, a: np.ndarray, b: np.ndarray) -> Isometry:
    if space.curvature_sign == 0:
        return geo.flat_reflection(a, b - a)
    if space.curvature_sign > 0:
        return geo.sphere_reflection(space, np.cross(a, b))
    return geo.hyperbolic_reflection(space, geo._J @ np.cross(a, b))


def doubled_polygon(kappa: int, vertices: np.ndarray, orders: Sequence[int],
                    label: Optional[str] = None, scale: float = 1.0,
                    tol: Tolerances = DEFAULT_TOL) -> OrbifoldModel:
    """Double of a convex geodesic polygon with corner angles pi/order.

    Realized as the quotient of the model space by the rotation group
    generated at the corners (angle 2*pi/order at each corner); the
    fundamental region is the polygon plus its reflection across the first
    edge, i.e. the front and back faces of the double.
    """
    space = ModelSpace(int(kappa), float(scale))
    verts = np.asarray(vertices, dtype=float)
    k = len(verts)
    if k < 3 or len(orders) != k:
        raise InvalidSpec("need >= 3 vertices and one corner order each")
    orders = [int(n) for n in orders]
    if any(n < 2 for n in orders):
        raise InvalidSpec("corner orders must be >= 2")
    for i in range(k):
        a, b, c = verts[(i - 1) % k], verts[i], verts[(i + 1) % k]
        ang = _angle_between(space, blog(space, b, a), blog(space, b, c))
        if abs(ang - np.pi / orders[i]) > 1e-9:
            raise InvalidSpec(f"corner {i} angle {ang:.12g} != pi/{orders[i]}")
    gens = [geo.rotation_about(space, verts[i], 2 * np.pi / orders[i])
            for i in range(k)]
    edge_lens = [float(bdist(space, verts[i], verts[(i + 1) % k]))
                 for i in range(k)]
    anchor = _incenter(space, verts)
    # charts, samples and the mirrored face all live within hull_rad of the
    # anchor, so any distance minimizer over the region has displacement
    # d(anchor, g anchor) <= 4 * hull_rad
    hull_rad = max(float(bdist(space, anchor, v)) for v in verts) + max(edge_lens)
    reach = 4.0 * hull_rad + 2.0 * max(edge_lens)
    if space.curvature_sign > 0:
        reach = np.pi * space.scale + 1.0  # finite group; keep everything
    group = enumerate_group(space, gens, anchor, reach)
    mirror_gens = [_edge_reflection(space, verts[i], verts[(i + 1) % k])
                   for i in range(k)]
    mirror = enumerate_group(space, gens + mirror_gens, anchor, reach)
    sigma = _edge_reflection(space, verts[0], verts[1])
    spacing = 0.15 * min(edge_lens)
    samples = _polygon_samples(space, verts, spacing, sigma)
    cap = _cap_radius_cap(space, tol)
    seeds = []
    for i in range(k):
        disp = _displacement(space, group, verts[i], 1e-9 * scale)
        seeds.append((verts[i], min(0.45 * disp, cap)))
    for c in (_incenter(space, verts), sigma.point(_incenter(space, verts))):
        disp = _displacement(space, group, c, 1e-9 * scale)
        seeds.append((c, min(0.45 * disp, cap)))
    centers, radii = _greedy_cover(space, group, samples, seeds, cap, 1e-9 * scale)
    area = 2.0 * _polygon_area(space, verts)
    name = label or f"doubled_polygon(kappa={kappa},orders={orders})"
    return _finish_model(name, space, group, centers, radii,
                         [(verts[i], orders[i]) for i in range(k)],
                         {"kind": "DoubledConvexPolygon", "kappa": kappa,
                          "scale": scale, "orders": orders,
                          "vertices": verts.tolist()},
                         area, samples, mirror_group=mirror, tol=tol)


def doubled_triangle(kappa: int, p: int, q: int, r: int, side: float = 1.0,
                     scale: float = 1.0,
                     tol: Tolerances = DEFAULT_TOL) -> OrbifoldModel:
    """Double of a geodesic triangle with angles pi/p, pi/q, pi/r."""
    angsum = np.pi / p + np.pi / q + np.pi / r
    if kappa == 0 and abs(angsum - np.pi) > 1e-9:
        raise InvalidSpec("flat triangle needs angle sum pi")
    if kappa > 0 and angsum <= np.pi + 1e-9:
        raise InvalidSpec("spherical triangle needs angle sum > pi")
    if kappa < 0 and angsum >= np.pi - 1e-9:
        raise InvalidSpec("hyperbolic triangle needs angle sum < pi")
    space = ModelSpace(int(kappa), float(scale))
    verts = _triangle_vertices(space, (np.pi / p, np.pi / q, np.pi / r), side)
    m = doubled_polygon(kappa, verts, (p, q, r),
                        label=f"doubled_triangle({p},{q},{r})"
                              + (f",side={side:g}" if kappa == 0 else ""),
                        scale=scale, tol=tol)
    m.spec = {"kind": "DoubledTriangle", "kappa": kappa, "orders": [p, q, r],
              "side": side, "scale": scale}
    return m


def flat_disk(radius: float = 4.0, domain_radius: float = 2.0,
              tol: Tolerances = DEFAULT_TOL) -> OrbifoldModel:
    """Single flat chart, trivial group; a plain disk for flat test fixtures."""
    if domain_radius >= radius:
        raise InvalidSpec("domain must sit strictly inside the chart")
    space = geo.FLAT
    nx = 25
    g = np.linspace(-domain_radius, domain_radius, nx)
    xs = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
    xs = xs[np.linalg.norm(xs, axis=1) <= domain_radius]
    return _finish_model(f"flat_disk(R={radius:g})", space, np.eye(3)[None],
                         [np.zeros(2)], [radius], [],
                         {"kind": "FlatDisk", "radius": radius,
                          "domain_radius": domain_radius},
                         np.pi * domain_radius ** 2, xs, tol=tol)


def _angle_between(space: ModelSpace, u: np.ndarray, v: np.ndarray) -> float:
    du = geo.ambient_dot(space, u, v)
    nu = float(geo.norm(space, u)) * float(geo.norm(space, v))
    return float(np.arccos(np.clip(du / max(nu, 1e-300), -1.0, 1.0)))


def _polygon_area(space: ModelSpace, verts: np.ndarray) -> float:
    k = len(verts)
    if space.curvature_sign == 0:
        x, y = verts[:, 0], verts[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    total = 0.0
    for i in range(k):
        a, b, c = verts[i], verts[(i - 1) % k], verts[(i + 1) % k]
        total += _angle_between(space, blog(space, a, b), blog(space, a, c))
    excess = total - (k - 2) * np.pi
    return float(space.curvature_sign * excess * space.scale ** 2)


def build_model(spec: dict, tol: Tolerances = DEFAULT_TOL) -> OrbifoldModel:
    """Dispatch on a constructor spec dictionary (the JSON ``spec`` field)."""
    kind = spec.get("kind")
    if kind == "RoundSphere":
        return round_sphere(spec["radius"], tol=tol)
    if kind == "SphereQuotient":
        return sphere_quotient(spec["radius"], spec["p"], tol=tol)
    if kind == "DoubledTriangle":
        p, q, r = spec["orders"]
        return doubled_triangle(spec["kappa"], p, q, r,
                                side=spec.get("side", 1.0),
                                scale=spec.get("scale", 1.0), tol=tol)
    if kind == "DoubledConvexPolygon":
        return doubled_polygon(spec["kappa"], np.array(spec["vertices"]),
                               spec["orders"], scale=spec.get("scale", 1.0),
                               tol=tol)
    if kind == "FlatDisk":
        return flat_disk(spec.get("radius", 4.0), spec.get("domain_radius", 2.0),
                         tol=tol)
    raise InvalidSpec(f"unknown model kind {kind!r}")
