"""Move representation, path search, plan validation/execution, and metrics.

A move is one extract-transit-release cycle of a single atom. Paths are
4-connected site sequences whose interior must be vacant at execution
time; endpoints are exempt (the source holds the atom being carried, the
destination receives it). Distances are counted in grid steps.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import InfeasibleInstanceError, InvalidPlanError, LatticeMismatchError, OracleLimitError
from .lattice import Lattice, Occupancy, Site, TargetPattern, defects
from . import search

PHASE_OPEN = "open"
PHASE_FILL = "fill"
PHASE_DIRECT = "direct"
_PHASES = (PHASE_OPEN, PHASE_FILL, PHASE_DIRECT)


@dataclass(frozen=True)
class Move:
    """Single-atom relocation along an explicit path from ``src`` to ``dst``."""

    src: Site
    dst: Site
    path: tuple[Site, ...]
    phase: str = PHASE_DIRECT

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"move src == dst == {self.src}")
        if self.phase not in _PHASES:
            raise ValueError(f"unknown move phase {self.phase!r}")
        p = self.path
        if len(p) < 2 or p[0] != self.src or p[-1] != self.dst:
            raise ValueError(f"path must run from {self.src} to {self.dst}, got {p}")
        if len(set(p)) != len(p):
            raise ValueError("path repeats a site")
        for (r0, c0), (r1, c1) in zip(p, p[1:]):
            if abs(r0 - r1) + abs(c0 - c1) != 1:
                raise ValueError(f"path steps {(r0, c0)} -> {(r1, c1)} are not 4-adjacent")

    @property
    def distance(self) -> int:
        """Grid steps traveled."""
        return len(self.path) - 1


@dataclass(frozen=True)
class MovePlan:
    """Ordered move list, valid against an evolving occupancy."""

    lattice: Lattice
    moves: tuple[Move, ...]

    def __len__(self) -> int:
        return len(self.moves)


@dataclass(frozen=True)
class PlanMetrics:
    n_moves: int
    total_distance: int
    n_per_filled: Optional[float]


@dataclass(frozen=True)
class PlanViolation:
    """First rule broken during sequential plan validation."""

    index: int
    kind: str  # "empty-source" | "occupied-destination" | "blocked-path"
    site: Site

    def __str__(self):
        return f"move {self.index}: {self.kind} at {self.site}"


def _path_from_flat(lattice: Lattice, flat: np.ndarray) -> tuple[Site, ...]:
    cols = lattice.cols
    return tuple((int(i) // cols, int(i) % cols) for i in flat)


def find_path(occ: Occupancy, src: Site, dst: Site, phase: str = PHASE_DIRECT) -> Optional[Move]:
    """Shortest unobstructed move from ``src`` to ``dst``, or None.

    Among all shortest paths on the vacancy graph the lexicographically
    smallest site sequence is returned, so results are reproducible.
    """
    if not occ.is_filled(src):
        raise ValueError(f"source {src} is not occupied")
    if occ.is_filled(dst):
        raise ValueError(f"destination {dst} is occupied")
    lat = occ.lattice
    flat = search.lex_shortest_path(occ.to_array(), lat.rows, lat.cols, lat.index(src), lat.index(dst))
    if flat.size == 0:
        return None
    return Move(src, dst, _path_from_flat(lat, flat), phase)


def _simulate(grid: np.ndarray, lattice: Lattice, moves: Iterable[Move]) -> Optional[PlanViolation]:
    """Replay moves on a flat occupancy array, mutating it; stop at first violation."""
    idx = lattice.index
    for i, mv in enumerate(moves):
        si = idx(mv.src)
        di = idx(mv.dst)
        if grid[si] == 0:
            return PlanViolation(i, "empty-source", mv.src)
        if grid[di] != 0:
            return PlanViolation(i, "occupied-destination", mv.dst)
        for site in mv.path[1:-1]:
            if grid[idx(site)] != 0:
                return PlanViolation(i, "blocked-path", site)
        grid[si] = 0
        grid[di] = 1
    return None


def validate_plan(occ: Occupancy, plan: MovePlan) -> Optional[PlanViolation]:
    """None when the plan replays cleanly, else the first violation."""
    if occ.lattice != plan.lattice:
        raise LatticeMismatchError("plan built for a different lattice")
    return _simulate(occ.to_array(), occ.lattice, plan.moves)


def apply_plan(occ: Occupancy, plan: MovePlan) -> Occupancy:
    """Ideal (lossless) execution; atom count is conserved."""
    if occ.lattice != plan.lattice:
        raise LatticeMismatchError("plan built for a different lattice")
    grid = occ.to_array()
    violation = _simulate(grid, occ.lattice, plan.moves)
    if violation is not None:
        raise InvalidPlanError(violation)
    return Occupancy.from_array(occ.lattice, grid)


def plan_metrics(plan: MovePlan, n_defects: int) -> PlanMetrics:
    """Counts and distances; ``n_per_filled`` is None when the instance had no defects."""
    total = sum(m.distance for m in plan.moves)
    n = len(plan.moves) / n_defects if n_defects > 0 else None
    return PlanMetrics(len(plan.moves), total, n)


def discard_surplus(occ: Occupancy, target: TargetPattern) -> Occupancy:
    """Drop every atom outside the target (zero move-count contribution)."""
    if occ.lattice != target.lattice:
        raise LatticeMismatchError("occupancy and target on different lattices")
    return Occupancy(occ.lattice, occ.filled & target.targets)


def chain_relocation_moves(lattice: Lattice, grid: np.ndarray, flat_path,
                           phase: str = PHASE_DIRECT) -> list[Move]:
    """Fill the last cell of ``flat_path`` by relaying atoms along it.

    ``flat_path`` runs source -> target. Each occupied interior cell is an
    obstacle: the one nearest the target moves into the target, every next
    one refills the slot just vacated, and the source finally refills the
    last slot. Interior segments between consecutive relay points are
    vacant, so every emitted move is legal. Mutates ``grid``.
    """
    cells = [int(x) for x in flat_path]
    relay = [0] + [k for k in range(1, len(cells) - 1) if grid[cells[k]]]
    moves = []
    dst_pos = len(cells) - 1
    for k in reversed(relay):
        seg = cells[k:dst_pos + 1]
        path = tuple(lattice.site(i) for i in seg)
        moves.append(Move(path[0], path[-1], path, phase))
        grid[seg[0]] = 0
        grid[seg[-1]] = 1
        dst_pos = k
    return moves


# --- serialization (JSON lines, one move per line) ------------------------

def plan_to_jsonl(plan: MovePlan) -> str:
    lines = []
    for i, mv in enumerate(plan.moves):
        lines.append(json.dumps({
            "i": i,
            "src": list(mv.src),
            "dst": list(mv.dst),
            "path": [list(s) for s in mv.path],
            "phase": mv.phase,
        }, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")


def plan_from_jsonl(lattice: Lattice, text: str) -> MovePlan:
    moves = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        moves.append(Move(
            tuple(rec["src"]),
            tuple(rec["dst"]),
            tuple(tuple(s) for s in rec["path"]),
            rec.get("phase", PHASE_DIRECT),
        ))
    return MovePlan(lattice, tuple(moves))


# --- exhaustive optimal-move oracle ---------------------------------------

def _vacant_components(lattice: Lattice, filled: frozenset[Site]) -> dict[Site, int]:
    comp: dict[Site, int] = {}
    cid = 0
    for start in lattice.sites():
        if start in filled or start in comp:
            continue
        comp[start] = cid
        q = deque([start])
        while q:
            cur = q.popleft()
            for nb in lattice.neighbors(cur):
                if nb not in filled and nb not in comp:
                    comp[nb] = cid
                    q.append(nb)
        cid += 1
    return comp


def legal_single_moves(lattice: Lattice, filled: frozenset[Site]) -> list[tuple[Site, Site]]:
    """All (src, dst) pairs realizable as one move in this occupancy."""
    comp = _vacant_components(lattice, filled)
    members: dict[int, list[Site]] = {}
    for site, cid in comp.items():
        members.setdefault(cid, []).append(site)
    out = []
    for atom in sorted(filled):
        seen: set[int] = set()
        for nb in lattice.neighbors(atom):
            if nb not in filled:
                seen.add(comp[nb])
        for cid in sorted(seen):
            for dst in members[cid]:
                out.append((atom, dst))
    return out


def optimal_moves_oracle(
    occ: Occupancy,
    target: TargetPattern,
    *,
    max_sites: int = 16,
    max_atoms: int = 8,
    node_budget: int = 2_000_000,
) -> int:
    """Minimum number of moves reaching zero vacant targets, by state-space BFS.

    Only for tiny instances; raises :class:`OracleLimitError` when the
    lattice or atom count exceeds the bounds or the node budget runs out.
    """
    lat = occ.lattice
    if lat != target.lattice:
        raise LatticeMismatchError("occupancy and target on different lattices")
    if lat.n_sites > max_sites:
        raise OracleLimitError(f"lattice has {lat.n_sites} sites, bound is {max_sites}")
    if occ.atom_count > max_atoms:
        raise OracleLimitError(f"instance has {occ.atom_count} atoms, bound is {max_atoms}")
    if occ.atom_count < len(target.targets):
        raise InfeasibleInstanceError("fewer atoms than target sites")
    goal = target.targets
    start = occ.filled
    if goal <= start:
        return 0
    visited = {start}
    frontier = [start]
    depth = 0
    expanded = 0
    while frontier:
        depth += 1
        nxt = []
        for state in frontier:
            expanded += 1
            if expanded > node_budget:
                raise OracleLimitError(f"node budget {node_budget} exhausted at depth {depth}")
            for src, dst in legal_single_moves(lat, state):
                child = (state - {src}) | {dst}
                if child in visited:
                    continue
                if goal <= child:
                    return depth
                visited.add(child)
                nxt.append(child)
        frontier = nxt
    raise InfeasibleInstanceError("search space exhausted without reaching the target")
