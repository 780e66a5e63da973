"""Grid geometry, occupancy state, target patterns, and stochastic loading.

Sites are ``(row, col)`` tuples, row-major, zero-based. All types are
immutable values; sampling takes an explicit seed so trials can run in
parallel without shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import InfeasibleInstanceError, LatticeMismatchError, PatternFitError

Site = tuple[int, int]

DEFAULT_PITCH_UM = 5.0


@dataclass(frozen=True)
class Lattice:
    """Rectangular tweezer grid. ``pitch_um`` is metadata only."""

    rows: int
    cols: int
    pitch_um: float = DEFAULT_PITCH_UM

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"lattice must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    def in_bounds(self, site: Site) -> bool:
        r, c = site
        return 0 <= r < self.rows and 0 <= c < self.cols

    def sites(self) -> Iterator[Site]:
        for r in range(self.rows):
            for c in range(self.cols):
                yield (r, c)

    def index(self, site: Site) -> int:
        """Flat row-major index; flat order equals lexicographic site order."""
        return site[0] * self.cols + site[1]

    def site(self, index: int) -> Site:
        return divmod(index, self.cols)

    def neighbors(self, site: Site) -> list[Site]:
        r, c = site
        out = []
        if r > 0:
            out.append((r - 1, c))
        if c > 0:
            out.append((r, c - 1))
        if c + 1 < self.cols:
            out.append((r, c + 1))
        if r + 1 < self.rows:
            out.append((r + 1, c))
        return out


def _check_sites(lattice: Lattice, sites, what: str) -> frozenset[Site]:
    fs = frozenset((int(r), int(c)) for r, c in sites)
    for s in fs:
        if not lattice.in_bounds(s):
            raise ValueError(f"{what} site {s} outside {lattice.rows}x{lattice.cols} lattice")
    return fs


@dataclass(frozen=True)
class Occupancy:
    """Which sites currently hold an atom (at most one per site)."""

    lattice: Lattice
    filled: frozenset[Site]

    def __post_init__(self):
        object.__setattr__(self, "filled", _check_sites(self.lattice, self.filled, "filled"))

    @property
    def atom_count(self) -> int:
        return len(self.filled)

    def is_filled(self, site: Site) -> bool:
        return site in self.filled

    def to_array(self) -> np.ndarray:
        """Flat uint8 occupancy mask, row-major."""
        a = np.zeros(self.lattice.n_sites, dtype=np.uint8)
        for s in self.filled:
            a[self.lattice.index(s)] = 1
        return a

    @classmethod
    def from_array(cls, lattice: Lattice, mask: np.ndarray) -> "Occupancy":
        flat = np.asarray(mask, dtype=np.uint8).reshape(-1)
        filled = frozenset(lattice.site(int(i)) for i in np.nonzero(flat)[0])
        return cls(lattice, filled)


@dataclass(frozen=True)
class TargetPattern:
    """The nonempty set of sites that must end up occupied.

    Everything else on the lattice is the outside-region (the reservoir
    that supplies source atoms).
    """

    lattice: Lattice
    targets: frozenset[Site]

    def __post_init__(self):
        if not self.targets:
            raise ValueError("target pattern must be nonempty")
        object.__setattr__(self, "targets", _check_sites(self.lattice, self.targets, "target"))

    @property
    def outside(self) -> frozenset[Site]:
        return frozenset(s for s in self.lattice.sites() if s not in self.targets)

    def to_array(self) -> np.ndarray:
        a = np.zeros(self.lattice.n_sites, dtype=np.uint8)
        for s in self.targets:
            a[self.lattice.index(s)] = 1
        return a


@dataclass(frozen=True)
class LoadingModel:
    """I.i.d. Bernoulli loading: each site fills with probability ``p``."""

    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"loading probability must be in [0, 1], got {self.p}")


def sample_loading(lattice: Lattice, model: LoadingModel) -> Occupancy:
    """Sample a stochastic loading instance; identical inputs give identical results."""
    rng = np.random.default_rng(model.seed)
    grid = rng.random((lattice.rows, lattice.cols)) < model.p
    return Occupancy.from_array(lattice, grid)


# --- target pattern specs ------------------------------------------------
#
# Grammar (shared by the CLI and config files):
#   square:K       centered KxK square
#   rect:RxC       centered RxC rectangle
#   bitmap:PATH    text file, one row per line, '#' = target, '.' = reservoir

def _parse_bitmap_text(text: str) -> list[Site]:
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise PatternFitError("bitmap file contains no rows")
    width = max(len(line) for line in rows)
    cells = []
    for r, line in enumerate(rows):
        for c, ch in enumerate(line):
            if ch == "#":
                cells.append((r, c))
            elif ch not in ".":
                raise PatternFitError(f"bitmap row {r} has unexpected character {ch!r}")
    if not cells:
        raise PatternFitError("bitmap defines no target sites")
    _ = width
    return cells


def _pattern_cells(spec: str) -> list[Site]:
    """Target cells in pattern-local coordinates (not yet centered)."""
    kind, _, arg = spec.partition(":")
    if kind == "square":
        k = int(arg)
        if k < 1:
            raise PatternFitError(f"square size must be >= 1, got {k}")
        return [(r, c) for r in range(k) for c in range(k)]
    if kind == "rect":
        rs, _, cs = arg.partition("x")
        h, w = int(rs), int(cs)
        if h < 1 or w < 1:
            raise PatternFitError(f"rectangle sides must be >= 1, got {h}x{w}")
        return [(r, c) for r in range(h) for c in range(w)]
    if kind == "bitmap":
        return _parse_bitmap_text(Path(arg).read_text())
    raise PatternFitError(f"unknown pattern spec {spec!r} (expected square:K, rect:RxC or bitmap:PATH)")


def pattern_shape(spec: str) -> tuple[int, int, int]:
    """(bounding-box rows, cols, target count) of a pattern spec."""
    cells = _pattern_cells(spec)
    rmin = min(r for r, _ in cells)
    cmin = min(c for _, c in cells)
    h = max(r for r, _ in cells) - rmin + 1
    w = max(c for _, c in cells) - cmin + 1
    return h, w, len(cells)


def make_target(lattice: Lattice, spec: str) -> TargetPattern:
    """Build a target pattern, centered on the lattice (ties toward lower indices)."""
    cells = _pattern_cells(spec)
    rmin = min(r for r, _ in cells)
    cmin = min(c for _, c in cells)
    h = max(r for r, _ in cells) - rmin + 1
    w = max(c for _, c in cells) - cmin + 1
    if h > lattice.rows or w > lattice.cols:
        raise PatternFitError(
            f"pattern {spec!r} ({h}x{w}) does not fit in {lattice.rows}x{lattice.cols} lattice"
        )
    r0 = (lattice.rows - h) // 2 - rmin
    c0 = (lattice.cols - w) // 2 - cmin
    return TargetPattern(lattice, frozenset((r + r0, c + c0) for r, c in cells))


def defects(occ: Occupancy, target: TargetPattern) -> tuple[frozenset[Site], frozenset[Site]]:
    """(vacant target sites, surplus atoms outside the target)."""
    if occ.lattice != target.lattice:
        raise LatticeMismatchError(
            f"occupancy lattice {occ.lattice} != target lattice {target.lattice}"
        )
    vacant = target.targets - occ.filled
    surplus = occ.filled - target.targets
    return vacant, surplus


def is_feasible(occ: Occupancy, target: TargetPattern) -> bool:
    """True when there are at least as many atoms as target sites."""
    return occ.atom_count >= len(target.targets)


def default_lattice_size(spec: str, p: float, surplus: float = 1.1) -> int:
    """Smallest square side L with ceil(L^2 * p) >= surplus * target count.

    The pattern's bounding box is a lower bound on L. This is the reservoir
    sizing used whenever no explicit lattice is given; the 10% default
    surplus keeps the infeasible-draw rate low at 50% loading.
    """
    h, w, count = pattern_shape(spec)
    lo = max(h, w)
    if p <= 0.0:
        raise InfeasibleInstanceError(f"loading p={p} can never supply {count} atoms")
    need = surplus * count
    limit = max(lo, int(math.ceil(math.sqrt(need / p))) + 2)
    for side in range(lo, limit + 1):
        if math.ceil(side * side * p) >= need:
            return side
    return limit


def parse_lattice_spec(spec: str) -> Lattice:
    """Parse 'RxC' (e.g. '8x8') into a Lattice."""
    rs, _, cs = spec.partition("x")
    try:
        return Lattice(int(rs), int(cs))
    except ValueError as exc:
        raise ValueError(f"bad lattice spec {spec!r} (expected RxC)") from exc


# --- text rendering -------------------------------------------------------

def occupancy_text(occ: Occupancy) -> str:
    """Plain grid, '#' = atom, '.' = empty (same alphabet as bitmap files)."""
    lines = []
    for r in range(occ.lattice.rows):
        lines.append("".join("#" if (r, c) in occ.filled else "." for c in range(occ.lattice.cols)))
    return "\n".join(lines)


def render_instance(occ: Occupancy, target: TargetPattern | None = None) -> str:
    """Grid with the target overlaid.

    '@' atom on a target site, 'o' vacant target, '*' atom in the
    reservoir, '.' empty reservoir site.
    """
    tset = target.targets if target is not None else frozenset()
    lines = []
    for r in range(occ.lattice.rows):
        row = []
        for c in range(occ.lattice.cols):
            filled = (r, c) in occ.filled
            on_target = (r, c) in tset
            row.append("@" if filled and on_target else "o" if on_target else "*" if filled else ".")
        lines.append("".join(row))
    return "\n".join(lines)
