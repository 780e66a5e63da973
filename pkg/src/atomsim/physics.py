"""Physical models: heating survival, transfer efficiency, timing, noisy replay.

The transport failure channels (extraction, transit, release) collapse to
a single per-move success probability by default. Moving an atom takes
pickup + per-grid-step + release time; a constant heating rate in the
carrier trap gives the survival law implemented by
:func:`survival_probability`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from .errors import InvalidPlanError
from .lattice import Occupancy, Site
from .planner import MovePlan, validate_plan

# heating rates (mK/s) measured for three carrier-trap RF drive chains,
# from cleanest to noisiest DC control of the drive frequency
HEATING_RATE_PRESETS_MK_S = (23.0, 2.9, 0.24)

FAILURE_LOST = "lost"
FAILURE_STRANDED = "stranded"


@dataclass(frozen=True)
class HeatingModel:
    """Trap depth (as temperature, mK), initial temperature (uK), heating rate (mK/s)."""

    u0_over_kb_mk: float
    rate_mk_s: float
    t0_uk: float = 20.0

    def __post_init__(self):
        if self.u0_over_kb_mk <= 0:
            raise ValueError("trap depth must be positive")
        if self.t0_uk <= 0:
            raise ValueError("initial temperature must be positive")
        if self.rate_mk_s < 0:
            raise ValueError("heating rate must be nonnegative")


def survival_probability(t: float, model: HeatingModel) -> float:
    """Probability an atom is still trapped after holding for ``t`` seconds.

    With truncated-Boltzmann energies, the atom survives while its energy
    stays below the trap depth; constant heating shrinks the effective
    depth-to-temperature ratio nu over time:

        P(t) = 1 - (1 + nu + nu^2/2) * exp(-nu),  nu = depth / (T0 + r*t)
    """
    if t < 0:
        raise ValueError(f"hold time must be nonnegative, got {t}")
    depth_k = model.u0_over_kb_mk * 1e-3
    temp_k = model.t0_uk * 1e-6 + model.rate_mk_s * 1e-3 * t
    nu = depth_k / temp_k
    p = 1.0 - (1.0 + nu + 0.5 * nu * nu) * math.exp(-nu)
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class TimingModel:
    """Per-move timing: pickup, transit per grid step, release (seconds)."""

    pickup_s: float = 1e-3
    per_grid_s: float = 1e-3
    release_s: float = 1e-3

    def __post_init__(self):
        if min(self.pickup_s, self.per_grid_s, self.release_s) < 0:
            raise ValueError("timing constants must be nonnegative")

    def move_seconds(self, grid_steps: int) -> float:
        return self.pickup_s + self.per_grid_s * grid_steps + self.release_s


def plan_duration(plan: MovePlan, timing: TimingModel) -> float:
    """Total wall time of a plan under the timing model."""
    return sum(timing.move_seconds(m.distance) for m in plan.moves)


@dataclass(frozen=True)
class NoiseModel:
    """Per-move transfer efficiency and failure behavior.

    ``zeta`` is the probability one move succeeds end to end. A nonzero
    ``gradient`` lowers efficiency toward the array edge (``shape`` gives
    the lattice extent for normalization); an explicit ``site_profile``
    overrides both. Failed moves either drop the atom (``lost``) or leave
    it at the source (``stranded``), where a later release on top of it
    destroys both atoms. A finite ``vacuum_lifetime_s`` applies exponential
    per-atom survival over the plan's elapsed time.
    """

    zeta: float = 1.0
    gradient: float = 0.0
    shape: Optional[tuple[int, int]] = None
    site_profile: Optional[Mapping[Site, float]] = None
    failure_mode: str = FAILURE_LOST
    vacuum_lifetime_s: float = math.inf
    timing: TimingModel = field(default_factory=TimingModel)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError(f"zeta must be in [0, 1], got {self.zeta}")
        if self.failure_mode not in (FAILURE_LOST, FAILURE_STRANDED):
            raise ValueError(f"unknown failure mode {self.failure_mode!r}")
        if self.vacuum_lifetime_s <= 0:
            raise ValueError("vacuum lifetime must be positive")
        if self.gradient and self.shape is None:
            raise ValueError("a gradient needs the lattice shape for normalization")
        if self.site_profile is not None:
            for s, z in self.site_profile.items():
                if not 0.0 <= z <= 1.0:
                    raise ValueError(f"site profile value {z} at {s} outside [0, 1]")


def site_efficiency(site: Site, noise: NoiseModel) -> float:
    """Transfer efficiency for moves releasing at ``site``.

    Uniform by default; with a gradient the efficiency falls linearly with
    normalized Chebyshev distance from the array center (edge sites are
    hardest to overlap with the carrier trap).
    """
    if noise.site_profile is not None:
        return min(1.0, max(0.0, float(noise.site_profile.get(site, noise.zeta))))
    if not noise.gradient:
        return noise.zeta
    rows, cols = noise.shape
    cr = (rows - 1) / 2.0
    cc = (cols - 1) / 2.0
    dmax = max(cr, cc)
    if dmax == 0:
        return min(1.0, max(0.0, noise.zeta))
    d = max(abs(site[0] - cr), abs(site[1] - cc)) / dmax
    return min(1.0, max(0.0, noise.zeta - noise.gradient * d))


def mean_site_efficiency(noise: NoiseModel) -> float:
    """Average of :func:`site_efficiency` over the array."""
    rows, cols = noise.shape
    return float(np.mean([site_efficiency((r, c), noise)
                          for r in range(rows) for c in range(cols)]))


def center_zeta_for_mean(mean_zeta: float, gradient: float, shape: tuple[int, int]) -> float:
    """Center efficiency that makes the graded profile average to ``mean_zeta``."""
    probe = NoiseModel(zeta=1.0, gradient=gradient, shape=shape)
    drop = 1.0 - mean_site_efficiency(probe)
    return mean_zeta + drop


def filling_fraction_analytic(n: float, zeta: float) -> float:
    """Expected success fraction per sorted site: 1 - n*(1 - zeta), clamped at 0.

    ``n`` is the number of moves spent per filled target site.
    """
    if n < 0:
        raise ValueError(f"moves per filled site must be nonnegative, got {n}")
    return max(0.0, 1.0 - n * (1.0 - zeta))


def cumulative_success(eta: float, n_sites: int) -> float:
    """Probability all ``n_sites`` independently-filled sites succeed: eta**n."""
    if n_sites < 0:
        raise ValueError(f"site count must be nonnegative, got {n_sites}")
    return float(eta) ** n_sites


@dataclass(frozen=True)
class MoveEvent:
    """Outcome of one executed move; ``t`` is elapsed time at move end."""

    move: int
    outcome: str  # "ok" | "lost" | "stranded" | "collision"
    t: float


def events_to_jsonl(events: list[MoveEvent]) -> str:
    lines = [json.dumps({"move": e.move, "outcome": e.outcome, "t": e.t},
                        separators=(",", ":")) for e in events]
    return "\n".join(lines) + ("\n" if lines else "")


def execute_noisy(occ: Occupancy, plan: MovePlan,
                  noise: NoiseModel) -> tuple[Occupancy, list[MoveEvent]]:
    """Replay a plan with per-move Bernoulli failures.

    Each move succeeds with its destination's efficiency. Failures follow
    ``noise.failure_mode``; releasing onto an occupied site (possible once
    atoms have stranded) destroys both atoms. A move whose source turned
    out empty (its cargo was lost upstream) is a no-op recorded as "lost"
    and consumes no randomness. With ``zeta=1`` and no vacuum lifetime the
    result equals ideal execution exactly.
    """
    violation = validate_plan(occ, plan)
    if violation is not None:
        raise InvalidPlanError(violation)
    lat = occ.lattice
    grid = occ.to_array()
    rng = np.random.default_rng(noise.seed)
    stranded_mode = noise.failure_mode == FAILURE_STRANDED
    events: list[MoveEvent] = []
    t = 0.0
    for i, mv in enumerate(plan.moves):
        t += noise.timing.move_seconds(mv.distance)
        si = lat.index(mv.src)
        di = lat.index(mv.dst)
        if grid[si] == 0:
            events.append(MoveEvent(i, "lost", t))
            continue
        zeta = site_efficiency(mv.dst, noise)
        if rng.random() < zeta:
            grid[si] = 0
            if grid[di]:
                grid[di] = 0  # release onto an occupied trap: both atoms lost
                events.append(MoveEvent(i, "collision", t))
            else:
                grid[di] = 1
                events.append(MoveEvent(i, "ok", t))
        elif stranded_mode:
            events.append(MoveEvent(i, "stranded", t))
        else:
            grid[si] = 0
            events.append(MoveEvent(i, "lost", t))
    if math.isfinite(noise.vacuum_lifetime_s) and t > 0:
        keep = math.exp(-t / noise.vacuum_lifetime_s)
        for idx in np.nonzero(grid)[0]:
            if rng.random() >= keep:
                grid[idx] = 0
    return Occupancy.from_array(lat, grid), events


def with_zeta(noise: NoiseModel, zeta: float) -> NoiseModel:
    """Copy of ``noise`` with a different uniform efficiency."""
    return replace(noise, zeta=zeta)
