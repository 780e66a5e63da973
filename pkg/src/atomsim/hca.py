"""Cluster-based sorting: open sealed vacancy pockets, then fill deepest-first.

Vacant target sites split into 4-connected regions. A region is *open*
when a reservoir atom can reach it along vacant sites, *closed* when
atoms seal it off. Closed regions are opened by relocating the sealing
atoms into the region's own vacancies; afterwards every remaining vacant
target is filled from the reservoir, deepest site first, so each fill is
a single move and the total move count stays near the defect count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InfeasibleInstanceError, LatticeMismatchError
from .lattice import Lattice, Occupancy, Site, TargetPattern, is_feasible
from .planner import Move, MovePlan, PHASE_FILL, PHASE_OPEN
from . import search


@dataclass(frozen=True)
class RegionDecomposition:
    """Vacant target sites partitioned into open and closed regions."""

    open_regions: tuple[frozenset[Site], ...]
    closed_regions: tuple[frozenset[Site], ...]

    @property
    def n1(self) -> int:
        """Vacant sites in open regions."""
        return sum(len(r) for r in self.open_regions)

    @property
    def n2(self) -> int:
        """Vacant sites in closed regions."""
        return sum(len(r) for r in self.closed_regions)

    @property
    def n_defects(self) -> int:
        return self.n1 + self.n2


def _check_lattices(occ: Occupancy, target: TargetPattern):
    if occ.lattice != target.lattice:
        raise LatticeMismatchError("occupancy and target on different lattices")


def _vacant_target_components(lat: Lattice, grid: np.ndarray, target_mask: np.ndarray) -> list[list[int]]:
    """4-connected components of vacant target cells, ordered by smallest index."""
    n = lat.n_sites
    cols = lat.cols
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start] or grid[start] != 0 or target_mask[start] == 0:
            continue
        comp = [start]
        seen[start] = True
        stack = [start]
        while stack:
            cur = stack.pop()
            r, c = divmod(cur, cols)
            for nb in (cur - cols if r > 0 else -1,
                       cur - 1 if c > 0 else -1,
                       cur + 1 if c + 1 < cols else -1,
                       cur + cols if r + 1 < lat.rows else -1):
                if nb >= 0 and not seen[nb] and grid[nb] == 0 and target_mask[nb] != 0:
                    seen[nb] = True
                    comp.append(nb)
                    stack.append(nb)
        comps.append(sorted(comp))
    return comps


def _decompose_arrays(lat: Lattice, grid: np.ndarray, target_mask: np.ndarray):
    """(open component lists, closed component lists) on flat indices."""
    comps = _vacant_target_components(lat, grid, target_mask)
    source_seeds = np.nonzero((grid != 0) & (target_mask == 0))[0].astype(np.int32)
    reach = search.multi_source_vacant_dist(grid, lat.rows, lat.cols, source_seeds)
    open_comps, closed_comps = [], []
    for comp in comps:
        if source_seeds.size and any(reach[i] > 0 for i in comp):
            open_comps.append(comp)
        else:
            closed_comps.append(comp)
    return open_comps, closed_comps


def decompose_regions(occ: Occupancy, target: TargetPattern) -> RegionDecomposition:
    """Partition vacant targets into open/closed regions (deterministic order)."""
    _check_lattices(occ, target)
    lat = occ.lattice
    grid = occ.to_array()
    tmask = target.to_array()
    open_comps, closed_comps = _decompose_arrays(lat, grid, tmask)
    to_sites = lambda comp: frozenset(lat.site(i) for i in comp)
    return RegionDecomposition(
        tuple(to_sites(c) for c in open_comps),
        tuple(to_sites(c) for c in closed_comps),
    )


def _open_one_region(lat: Lattice, grid: np.ndarray, target_mask: np.ndarray,
                     outside_mask: np.ndarray, comp: list[int]) -> list[Move]:
    """Relocate sealing atoms into the region's vacancies until it is open.

    While the region is closed, every occupied cell adjacent to its vacant
    component is a filled target site (an adjacent reservoir atom would
    already make it open), so each relocation creates a replacement vacancy
    and the total defect count is conserved.
    """
    rows, cols = lat.rows, lat.cols
    moves: list[Move] = []
    region = set(comp)  # original sites plus vacancies created while opening
    if not ((grid != 0) & (outside_mask != 0)).any():
        raise InfeasibleInstanceError("no reservoir atoms available to open a closed region")
    for _ in range(4 * lat.n_sites):
        seeds = np.array(sorted(i for i in region if grid[i] == 0), dtype=np.int32)
        src_mask = ((grid != 0) & (outside_mask != 0)).astype(np.uint8)
        opener, _ = search.nearest_occupied(grid, src_mask, rows, cols, seeds)
        if opener >= 0:
            return moves  # a reservoir atom can reach the region: open
        obstacle, _ = search.nearest_occupied(grid, (grid != 0).astype(np.uint8), rows, cols, seeds)
        if obstacle < 0:
            raise InfeasibleInstanceError("closed region cannot be reached by any atom")
        # receiving vacancy: farthest from the obstacle, so the entry corridor
        # stays clear for subsequent relocations and fills
        depth = search.multi_source_vacant_dist(grid, rows, cols, np.array([obstacle], np.int32))
        candidates = sorted((i for i in region if grid[i] == 0 and depth[i] > 0),
                            key=lambda i: (-depth[i], i))
        placed = False
        for recv in candidates:
            flat = search.lex_shortest_path(grid, rows, cols, obstacle, recv)
            if flat.size:
                cols_ = cols
                path = tuple((int(x) // cols_, int(x) % cols_) for x in flat)
                moves.append(Move(path[0], path[-1], path, PHASE_OPEN))
                grid[obstacle] = 0
                grid[recv] = 1
                if target_mask[obstacle]:
                    region.add(int(obstacle))
                region.discard(recv)
                placed = True
                break
        if not placed:
            raise InfeasibleInstanceError("no reachable vacancy to receive a sealing atom")
    raise InfeasibleInstanceError("region opening did not converge")


def open_closed_regions(occ: Occupancy, dec: RegionDecomposition,
                        target: Optional[TargetPattern] = None) -> tuple[list[Move], Occupancy]:
    """Open every closed region of ``dec``; returns the moves and new occupancy.

    ``target`` may be omitted when ``dec`` already covers all vacant targets
    (it is reconstructed from the decomposition in that case).
    """
    lat = occ.lattice
    if target is None:
        sites = set().union(*dec.open_regions, *dec.closed_regions) | occ.filled
        target = TargetPattern(lat, frozenset(sites))  # best-effort reconstruction
    grid = occ.to_array()
    tmask = target.to_array()
    outside = (tmask == 0).astype(np.uint8)
    moves = _open_all(lat, grid, tmask, outside)
    return moves, Occupancy.from_array(lat, grid)


def _open_all(lat: Lattice, grid: np.ndarray, tmask: np.ndarray, outside: np.ndarray) -> list[Move]:
    moves: list[Move] = []
    for _ in range(4 * lat.n_sites):
        _, closed = _decompose_arrays(lat, grid, tmask)
        if not closed:
            return moves
        moves.extend(_open_one_region(lat, grid, tmask, outside, closed[0]))
    raise InfeasibleInstanceError("opening phase did not converge")


def plan_hca(occ: Occupancy, target: TargetPattern, *,
             use_connection_route: bool = False) -> MovePlan:
    """Full cluster plan: opening moves, then deepest-first single-move fills."""
    _check_lattices(occ, target)
    if not is_feasible(occ, target):
        raise InfeasibleInstanceError(
            f"{occ.atom_count} atoms cannot fill {len(target.targets)} target sites")
    lat = occ.lattice
    rows, cols = lat.rows, lat.cols
    grid = occ.to_array()
    tmask = target.to_array()
    outside = (tmask == 0).astype(np.uint8)

    moves: list[Move] = []
    if use_connection_route:
        dec = decompose_regions(Occupancy.from_array(lat, grid), target)
        if dec.closed_regions:
            route = plan_connection_route(dec, Occupancy.from_array(lat, grid))
            moves.extend(_open_along_route(lat, grid, tmask, outside, route))
    moves.extend(_open_all(lat, grid, tmask, outside))

    outside_seeds = np.nonzero(outside)[0].astype(np.int32)
    depth = search.multi_source_vacant_dist(grid, rows, cols, outside_seeds)
    order = sorted((i for i in range(lat.n_sites) if tmask[i] and grid[i] == 0),
                   key=lambda i: (-depth[i], i))
    for v in order:
        if grid[v]:
            continue
        mv = _fill_from_reservoir(lat, grid, outside, v)
        if mv is None:
            # a previous fill sealed this pocket off; reopen and retry
            moves.extend(_open_all(lat, grid, tmask, outside))
            mv = _fill_from_reservoir(lat, grid, outside, v)
            if mv is None:
                raise InfeasibleInstanceError(f"no reservoir atom can reach {lat.site(v)}")
        moves.append(mv)
    return MovePlan(lat, tuple(moves))


def _fill_from_reservoir(lat: Lattice, grid: np.ndarray, outside: np.ndarray, v: int) -> Optional[Move]:
    src_mask = ((grid != 0) & (outside != 0)).astype(np.uint8)
    s, _ = search.nearest_occupied(grid, src_mask, lat.rows, lat.cols,
                                   np.array([v], np.int32))
    if s < 0:
        return None
    flat = search.lex_shortest_path(grid, lat.rows, lat.cols, s, v)
    path = tuple(lat.site(int(x)) for x in flat)
    grid[s] = 0
    grid[v] = 1
    return Move(path[0], path[-1], path, PHASE_FILL)


# --- region connection route (optional opening strategy) -------------------

RESERVOIR_NODE = "reservoir"


@dataclass(frozen=True)
class RouteEdge:
    """Corridor connecting route nodes; three paths meet when ``junction`` is set."""

    nodes: tuple[str, ...]
    paths: tuple[tuple[Site, ...], ...]
    obstacles: frozenset[Site]
    junction: Optional[Site] = None

    @property
    def cost(self) -> int:
        return len(self.obstacles)


@dataclass(frozen=True)
class Route:
    """Connection route over regions, approximately minimizing sealing atoms."""

    nodes: tuple[str, ...]
    edges: tuple[RouteEdge, ...]
    obstacle_count: int
    chain_obstacle_count: int

    @property
    def obstacle_sites(self) -> frozenset[Site]:
        out: frozenset[Site] = frozenset()
        for e in self.edges:
            out |= e.obstacles
        return out


def _trace(parent: np.ndarray, end: int) -> list[int]:
    path = [end]
    while parent[path[-1]] >= 0:
        path.append(int(parent[path[-1]]))
    return path[::-1]


def plan_connection_route(dec: RegionDecomposition, occ: Occupancy) -> Route:
    """Route connecting all regions (and the reservoir) with few sealing atoms.

    Nearest-neighbor chain over corridor obstacle counts, 2-opt improved,
    then a junction pass that merges adjacent corridor pairs into three-way
    stars when that crosses fewer atoms.
    """
    if not dec.closed_regions:
        raise ValueError("connection route needs at least one closed region")
    lat = occ.lattice
    rows, cols = lat.rows, lat.cols
    grid = occ.to_array()

    labels: list[str] = [f"closed:{i}" for i in range(len(dec.closed_regions))]
    cells: list[list[int]] = [sorted(lat.index(s) for s in r) for r in dec.closed_regions]
    for i, r in enumerate(dec.open_regions):
        labels.append(f"open:{i}")
        cells.append(sorted(lat.index(s) for s in r))
    # the atom supply is modeled as one more node; region cells are vacant,
    # so every atom on the lattice is a potential endpoint for it
    occupied_outside = [i for i in range(lat.n_sites) if grid[i]]
    has_reservoir = bool(occupied_outside)
    if has_reservoir:
        labels.append(RESERVOIR_NODE)

    k = len(labels)
    costs = []
    parents = []
    for idx in range(k):
        if labels[idx] == RESERVOIR_NODE:
            seeds = np.array(occupied_outside, np.int32)
        else:
            seeds = np.array(cells[idx], np.int32)
        cost, parent = search.zero_one_bfs(grid, rows, cols, seeds)
        costs.append(cost)
        parents.append(parent)

    def node_cells(i: int) -> list[int]:
        if labels[i] == RESERVOIR_NODE:
            return occupied_outside
        return cells[i]

    def pair_cost(a: int, b: int) -> tuple[int, int]:
        """(corridor obstacle count, endpoint cell in b) for corridor a->b."""
        best = (2**30, -1)
        ca = costs[a]
        for cell in node_cells(b):
            # entering an occupied endpoint is not an obstacle crossing:
            # the reservoir endpoint is the source atom itself
            w = int(ca[cell]) - (1 if grid[cell] else 0)
            if w < best[0]:
                best = (w, cell)
        return best

    pc = [[pair_cost(a, b) for b in range(k)] for a in range(k)]

    # nearest-neighbor chain from the reservoir (or the first closed region)
    start = k - 1 if has_reservoir else 0
    order = [start]
    left = set(range(k)) - {start}
    while left:
        cur = order[-1]
        nxt = min(left, key=lambda j: (pc[cur][j][0], j))
        order.append(nxt)
        left.remove(nxt)

    def chain_cost(seq: list[int]) -> int:
        return sum(pc[a][b][0] for a, b in zip(seq, seq[1:]))

    improved = True
    while improved:
        improved = False
        for i in range(1, k - 1):
            for j in range(i + 1, k):
                cand = order[:i] + order[i:j + 1][::-1] + order[j + 1:]
                if chain_cost(cand) < chain_cost(order):
                    order = cand
                    improved = True

    def corridor_edge(a: int, b: int) -> RouteEdge:
        _, endpoint = pc[a][b]
        flat = _trace(parents[a], endpoint)
        path = tuple(lat.site(i) for i in flat)
        # a reservoir endpoint is the source atom itself, not an obstacle
        obstacles = frozenset(lat.site(i) for pos, i in enumerate(flat)
                              if grid[i] and not (labels[a] == RESERVOIR_NODE and pos == 0)
                              and not (labels[b] == RESERVOIR_NODE and pos == len(flat) - 1))
        return RouteEdge((labels[a], labels[b]), (path,), obstacles)

    edges = [corridor_edge(a, b) for a, b in zip(order, order[1:])]
    chain_total = len(frozenset().union(*(e.obstacles for e in edges))) if edges else 0

    # junction pass: try replacing adjacent corridor pairs with a 3-star
    final_edges: list[RouteEdge] = list(edges)
    for i in range(len(order) - 2):
        a, b, c = order[i], order[i + 1], order[i + 2]
        pair_total = pc[a][b][0] + pc[b][c][0]
        best_j, best_star = -1, 2**30
        for cell in range(lat.n_sites):
            ca, cb, cc = int(costs[a][cell]), int(costs[b][cell]), int(costs[c][cell])
            if ca >= 2**30 or cb >= 2**30 or cc >= 2**30:
                continue
            star = ca + cb + cc - 2 * int(grid[cell])
            if star < best_star or (star == best_star and cell < best_j):
                best_star, best_j = star, cell
        if best_j >= 0 and best_star < pair_total:
            jpaths = []
            jobstacles: set[Site] = set()
            for node in (a, b, c):
                flat = _trace(parents[node], best_j)
                jpaths.append(tuple(lat.site(x) for x in flat))
                for pos, x in enumerate(flat):
                    if grid[x] and not (labels[node] == RESERVOIR_NODE and pos == 0):
                        jobstacles.add(lat.site(x))
            final_edges[i] = RouteEdge((labels[a], labels[b], labels[c]),
                                       tuple(jpaths), frozenset(jobstacles),
                                       junction=lat.site(best_j))
            final_edges[i + 1] = None  # type: ignore[assignment]
    final_edges = [e for e in final_edges if e is not None]
    total = len(frozenset().union(*(e.obstacles for e in final_edges))) if final_edges else 0
    if total > chain_total:
        final_edges, total = edges, chain_total
    return Route(tuple(labels), tuple(final_edges), total, chain_total)


def _open_along_route(lat: Lattice, grid: np.ndarray, tmask: np.ndarray,
                      outside: np.ndarray, route: Route) -> list[Move]:
    """Relocate route-corridor atoms into closed regions; best effort.

    Any region the route fails to open is handled by the standard opener
    that always runs afterwards.
    """
    moves: list[Move] = []
    for edge in route.edges:
        closed_nodes = [n for n in edge.nodes if n.startswith("closed:")]
        if not closed_nodes:
            continue
        for path in edge.paths:
            for site in reversed(path):
                idx = lat.index(site)
                if not grid[idx] or tmask[idx] == 0:
                    continue
                _, closed = _decompose_arrays(lat, grid, tmask)
                target_comp = None
                for comp in closed:
                    seeds = np.array([i for i in comp if grid[i] == 0], np.int32)
                    if seeds.size == 0:
                        continue
                    depth = search.multi_source_vacant_dist(grid, lat.rows, lat.cols,
                                                            np.array([idx], np.int32))
                    cands = sorted((i for i in comp if grid[i] == 0 and depth[i] > 0),
                                   key=lambda i: (-depth[i], i))
                    if cands:
                        target_comp = cands
                        break
                if target_comp is None:
                    continue
                flat = search.lex_shortest_path(grid, lat.rows, lat.cols, idx, target_comp[0])
                if flat.size == 0:
                    continue
                p = tuple(lat.site(int(x)) for x in flat)
                moves.append(Move(p[0], p[-1], p, PHASE_OPEN))
                grid[idx] = 0
                grid[target_comp[0]] = 1
    return moves
