"""Layered center-out sorting.

Target sites are peeled into concentric layers (layer 1 touches the
reservoir, the last layer is the center) and filled innermost layer
first, each vacancy taking the nearest usable atom over an unobstructed
shortest path. Atoms parked on not-yet-processed outer layers may serve
as sources; the vacancies they leave behind are refilled when their own
layer's turn comes, which keeps individual moves short at the cost of
extra moves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleInstanceError, LatticeMismatchError
from .lattice import Occupancy, Site, TargetPattern, is_feasible
from .planner import Move, MovePlan, PHASE_DIRECT, chain_relocation_moves
from . import search

_INF = 2**30


@dataclass(frozen=True)
class LayerClassification:
    """Partition of the target set; ``layers[0]`` is the outermost shell."""

    layers: tuple[frozenset[Site], ...]

    def __len__(self) -> int:
        return len(self.layers)


def classify_layers(target: TargetPattern) -> LayerClassification:
    """Peel the target set from the reservoir boundary inward.

    Layer 1 holds every target site 4-adjacent to a non-target site; each
    following layer holds the remaining sites adjacent to the previous
    layer. A target covering the whole lattice has no boundary to peel
    from; any such remainder becomes one final layer.
    """
    lat = target.lattice
    targets = target.targets
    remaining = set(targets)
    current = {t for t in remaining if any(nb not in targets for nb in lat.neighbors(t))}
    layers: list[frozenset[Site]] = []
    while remaining:
        if not current:
            layers.append(frozenset(remaining))
            break
        layers.append(frozenset(current))
        remaining -= current
        prev = layers[-1]
        current = {t for t in remaining if any(nb in prev for nb in lat.neighbors(t))}
    return LayerClassification(tuple(layers))


def plan_asa(occ: Occupancy, target: TargetPattern, *,
             outer_sources: bool = True, displace_depth: int = 3) -> MovePlan:
    """Center-out plan; every emitted move is valid against the evolving state.

    ``outer_sources`` lets atoms sitting on unprocessed outer-layer target
    sites be picked as sources (they are refilled later). When a vacancy is
    sealed off, the cheapest blocking atom is displaced by relaying it
    toward the vacancy, up to ``displace_depth`` blockers; deeper seals are
    retried after the layer pass and once more at the very end.
    """
    if occ.lattice != target.lattice:
        raise LatticeMismatchError("occupancy and target on different lattices")
    if not is_feasible(occ, target):
        raise InfeasibleInstanceError(
            f"{occ.atom_count} atoms cannot fill {len(target.targets)} target sites")
    lat = occ.lattice
    rows, cols = lat.rows, lat.cols
    grid = occ.to_array()
    tmask = target.to_array()

    layer_idx = [sorted(lat.index(s) for s in layer)
                 for layer in classify_layers(target).layers]
    protected = np.zeros(lat.n_sites, dtype=np.uint8)
    if outer_sources:
        allowed = np.ones(lat.n_sites, dtype=np.uint8)
    else:
        allowed = (tmask == 0).astype(np.uint8)

    moves: list[Move] = []
    deferred: list[int] = []

    def eligible_mask() -> np.ndarray:
        return (allowed != 0) & (protected == 0)

    def direct_fill(v: int) -> bool:
        src_mask = ((grid != 0) & eligible_mask()).astype(np.uint8)
        s, _ = search.nearest_occupied(grid, src_mask, rows, cols, np.array([v], np.int32))
        if s < 0:
            return False
        flat = search.lex_shortest_path(grid, rows, cols, s, v)
        path = tuple(lat.site(int(x)) for x in flat)
        moves.append(Move(path[0], path[-1], path, PHASE_DIRECT))
        grid[s] = 0
        grid[v] = 1
        return True

    def chain_fill(v: int, depth: int | None) -> bool:
        cost, parent = search.zero_one_bfs(grid, rows, cols, np.array([v], np.int32))
        mask = (grid != 0) & eligible_mask()
        idxs = np.nonzero(mask)[0]
        if idxs.size == 0:
            return False
        c = cost[idxs]
        best = int(idxs[np.lexsort((idxs, c))[0]])
        if int(cost[best]) >= _INF:
            return False
        blockers = int(cost[best]) - 1  # entering the source itself is exempt
        if depth is not None and blockers > depth:
            return False
        trace = [best]
        while parent[trace[-1]] >= 0:
            trace.append(int(parent[trace[-1]]))
        moves.extend(chain_relocation_moves(lat, grid, trace, PHASE_DIRECT))
        return True

    for k in range(len(layer_idx) - 1, -1, -1):
        for i in layer_idx[k]:
            protected[i] = 1
        vacant_k = [i for i in layer_idx[k] if grid[i] == 0]
        retry = []
        for v in vacant_k:
            if grid[v] == 0 and not direct_fill(v):
                retry.append(v)
        for v in retry:
            if grid[v] == 0 and not chain_fill(v, displace_depth):
                deferred.append(v)
    for v in deferred:
        if grid[v] == 0 and not direct_fill(v) and not chain_fill(v, None):
            raise InfeasibleInstanceError(f"no source can reach target site {lat.site(v)}")
    return MovePlan(lat, tuple(moves))
