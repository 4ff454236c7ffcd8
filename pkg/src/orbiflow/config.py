"""Central tolerance record and driver configuration.

All numeric tolerances used across the library live in one place so that a
single object documents the shipped defaults.  Model-dependent tolerances
(endpoint matching, cluster merging) are expressed as factors of the covering
margin delta and resolved per model via `resolve`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class Tolerances:
    # invariants of the geometry kernel
    ortho: float = 1e-12              # quadric / orthogonality constraints
    exp_log_roundtrip: float = 1e-10
    isometry: float = 1e-12           # orthogonality of linear parts
    antipodal_guard: float = 1e-9     # distance-to-pi*R guard for log/geodesic

    # atlas construction
    cap_margin_factor: float = 0.05   # spherical chart radius cap: pi*R/2 - 0.05*R
    delta_safety: float = 0.9         # safety factor on the sampled Lebesgue number
    germ_identify: float = 1e-9       # motions equal on 3 test points

    # cycle space (factors of delta)
    match_factor: float = 1e-7        # tau_match = match_factor * delta
    merge_factor: float = 1e-6        # tau_merge = merge_factor * delta
    germ_chain: float = 1e-9          # junction compatibility
    length_exact: float = 1e-12

    # descent / drivers
    stable_tol: float = 1e-8          # norm (sum of squares) below which a cycle is stable
    mono_slack: float = 1e-9          # monotonicity slack on traces
    accept_factor: float = 0.25       # backtracking acceptance: dLen >= tau*norm*accept_factor

    def tau_match(self, delta: float) -> float:
        return self.match_factor * delta

    def tau_merge(self, delta: float) -> float:
        return self.merge_factor * delta


DEFAULT_TOL = Tolerances()


@dataclass
class DriverConfig:
    """Configuration of the alternating shortening driver.

    The break number N must satisfy 4 * length_budget / delta <= N so that the
    geodesic-replacement output re-enters the small-segment domain (segment
    lengths <= delta / 4).
    """

    length_budget: float              # L: maximum admissible cycle length
    breaks: int                       # N: breaks per half (cycle has 2N segments)
    epsilon: float                    # target length for full collapse
    tol_stable: float = DEFAULT_TOL.stable_tol
    max_iters: int = 20000
    tau_merge: float = 0.0            # resolved against the model when 0
    backtrack_shrink: float = 0.5
    backtrack_grow: float = 1.6
    accept_factor: float = DEFAULT_TOL.accept_factor
    descent_steps_per_round: int = 25
    homotopy_samples: int = 5         # s-samples recorded per Birkhoff stage
    seed: int = 0

    def validated(self, delta: float) -> "DriverConfig":
        if self.breaks * delta <= self.length_budget:
            raise ValueError(
                f"break number {self.breaks} too small: N*delta = "
                f"{self.breaks * delta:.6g} <= L = {self.length_budget:.6g}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        cfg = self
        if cfg.tau_merge == 0.0:
            cfg = replace(cfg, tau_merge=DEFAULT_TOL.tau_merge(delta))
        return cfg


def default_breaks(length_budget: float, delta: float, multiple_of: int = 3) -> int:
    """Smallest admissible break number: N >= 4L/delta, rounded up to a multiple."""
    n = max(4, math.ceil(4.0 * length_budget / delta))
    if n % multiple_of:
        n += multiple_of - n % multiple_of
    return n


def default_epsilon(delta: float, clearance: float = math.inf) -> float:
    """Shipped default collapse target: min(delta/10, clearance/4)."""
    return min(delta / 10.0, clearance / 4.0)


def make_driver_config(model, length_budget: float, **overrides) -> DriverConfig:
    """Build a DriverConfig tied to a model's covering margin."""
    delta = model.delta
    breaks = overrides.pop("breaks", None) or default_breaks(length_budget, delta)
    epsilon = overrides.pop("epsilon", None) or default_epsilon(delta, model.clearance())
    cfg = DriverConfig(length_budget=length_budget, breaks=breaks, epsilon=epsilon,
                       **overrides)
    return cfg.validated(delta)
