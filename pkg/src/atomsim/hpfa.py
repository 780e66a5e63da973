"""Expanding-radius path-finding sort.

A search distance grows from 1; each round fills every still-vacant
target that has a reservoir atom within that distance, choosing the
candidate whose geometric shortest path crosses the fewest atoms. A
blocked path is resolved by relaying: the blocker nearest the target
moves into it and the source refills the chain. Sources stay as close as
the radius allows, so total travel is short but relays inflate the move
count.
"""

from __future__ import annotations

import numpy as np

from .errors import InfeasibleInstanceError, LatticeMismatchError
from .lattice import Occupancy, TargetPattern, is_feasible
from .planner import Move, MovePlan, PHASE_DIRECT, chain_relocation_moves
from . import search


def plan_hpfa(occ: Occupancy, target: TargetPattern, *,
              fill_all_per_round: bool = True) -> MovePlan:
    """Plan with monotonically growing search distance.

    ``fill_all_per_round=False`` escalates the distance per target instead
    of per round (targets processed in lexicographic order).
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
    outside = (tmask == 0).astype(np.uint8)
    diameter = rows + cols - 2

    moves: list[Move] = []

    def fill_within(v: int, d: int) -> bool:
        s, blockers = search.best_source_within(grid, outside, rows, cols, v, d)
        if s < 0:
            return False
        if blockers == 0:
            flat = search.lex_shortest_path(grid, rows, cols, s, v)
            path = tuple(lat.site(int(x)) for x in flat)
            moves.append(Move(path[0], path[-1], path, PHASE_DIRECT))
            grid[s] = 0
            grid[v] = 1
        else:
            flat = search.monotone_obstacle_path(grid, rows, cols, s, v)
            moves.extend(chain_relocation_moves(lat, grid, flat, PHASE_DIRECT))
        return True

    vacant = [i for i in range(lat.n_sites) if tmask[i] and grid[i] == 0]
    if fill_all_per_round:
        d = 1
        while vacant:
            if d > diameter:
                raise InfeasibleInstanceError(
                    f"search distance exceeded lattice diameter with {len(vacant)} targets vacant")
            vacant = [v for v in vacant if grid[v] == 0 and not fill_within(v, d)]
            d += 1
    else:
        for v in vacant:
            if grid[v]:
                continue
            for d in range(1, diameter + 1):
                if fill_within(v, d):
                    break
            else:
                raise InfeasibleInstanceError(
                    f"no reservoir atom can serve target site {lat.site(v)}")
    return MovePlan(lat, tuple(moves))
