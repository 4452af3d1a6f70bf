"""All-pairs shortest-path distances on the passability graph, and the two
potential functions built on them: closeness to the goal and closeness to
the nearest demonstrated state.

``D_max`` of the normalized ratios is read as the eccentricity of the
target cell (the largest shortest-path distance from any cell that can
reach it), which keeps every ratio inside [0, 1].
"""
from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import MapError, UnreachableStateError
from .gridworld import Cell, GridMap

UNREACHABLE = 0xFFFF
_MAGIC = b"DTBL1"


@dataclass(frozen=True)
class PassabilityGraph:
    """Unit-weight graph of orthogonally adjacent passable cells."""

    width: int
    height: int
    nodes: tuple[Cell, ...]
    edges: tuple[tuple[Cell, Cell], ...]  # each pair ordered (min, max)
    map_id: str

    def neighbors(self, cell: Cell) -> list[Cell]:
        out = []
        for a, b in self.edges:
            if a == cell:
                out.append(b)
            elif b == cell:
                out.append(a)
        return out


def build_graph(gm: GridMap) -> PassabilityGraph:
    nodes = tuple(gm.passable_cells())
    node_set = set(nodes)
    edges = []
    for r, c in nodes:
        for dr, dc in ((0, 1), (1, 0)):  # each undirected edge once
            other = (r + dr, c + dc)
            if other in node_set:
                edges.append(((r, c), other))
    return PassabilityGraph(width=gm.width, height=gm.height, nodes=nodes,
                            edges=tuple(edges), map_id=gm.map_id)


class DistanceTable:
    """Dense cell-id x cell-id matrix of shortest-path lengths.

    Indices are row-major cell ids over the full grid; impassable cells are
    UNREACHABLE everywhere.  Eccentricities are cached per target.
    """

    def __init__(self, width: int, height: int, matrix: np.ndarray, map_id: str = ""):
        n = width * height
        if matrix.shape != (n, n) or matrix.dtype != np.uint16:
            raise ValueError("distance matrix must be uint16 of shape (w*h, w*h)")
        self.width = width
        self.height = height
        self.matrix = matrix
        self.map_id = map_id
        finite = np.where(matrix == UNREACHABLE, 0, matrix)
        self._ecc = finite.max(axis=0).astype(np.int64)

    def _cid(self, cell: Cell) -> int:
        return cell[0] * self.width + cell[1]

    def d(self, a: Cell, b: Cell) -> Optional[int]:
        """Shortest-path length, or None when no path exists."""
        v = int(self.matrix[self._cid(a), self._cid(b)])
        return None if v == UNREACHABLE else v

    def ecc(self, target: Cell) -> int:
        """Largest distance to ``target`` over all cells that can reach it."""
        return int(self._ecc[self._cid(target)])

    def ratio_to(self, cell: Cell, target: Cell) -> float:
        """d(cell,target)/ecc(target) in [0,1]; 0 when cell == target."""
        dv = self.d(cell, target)
        if dv is None:
            raise UnreachableStateError(f"no path from {cell} to {target}")
        if dv == 0:
            return 0.0
        return dv / self.ecc(target)

    def column(self, target: Cell) -> np.ndarray:
        """Distances from every cell id to ``target`` (uint16 view)."""
        return self.matrix[:, self._cid(target)]


def apsp(graph: PassabilityGraph) -> DistanceTable:
    """All-pairs shortest paths by running Dijkstra from every node."""
    n = graph.width * graph.height
    matrix = np.full((n, n), UNREACHABLE, dtype=np.uint16)
    adj: dict[Cell, list[Cell]] = {node: [] for node in graph.nodes}
    for a, b in graph.edges:
        adj[a].append(b)
        adj[b].append(a)

    def cid(cell: Cell) -> int:
        return cell[0] * graph.width + cell[1]

    for src in graph.nodes:
        dist = {src: 0}
        heap = [(0, src)]
        while heap:
            dv, cell = heapq.heappop(heap)
            if dv > dist.get(cell, UNREACHABLE):
                continue
            for nxt in adj[cell]:
                alt = dv + 1
                if alt < dist.get(nxt, UNREACHABLE):
                    dist[nxt] = alt
                    heapq.heappush(heap, (alt, nxt))
        row = cid(src)
        for cell, dv in dist.items():
            matrix[row, cid(cell)] = dv
    return DistanceTable(graph.width, graph.height, matrix, graph.map_id)


def distance_table(gm: GridMap, cache_dir: Optional[Path] = None) -> DistanceTable:
    """Build (or load from cache) the distance table for a map."""
    if cache_dir is not None:
        path = Path(cache_dir) / f"{gm.map_id}.dtbl"
        if path.exists():
            table = load_table(path)
            if (table.width, table.height) != (gm.width, gm.height):
                raise MapError(f"cached table {path} does not match map dimensions")
            table.map_id = gm.map_id
            return table
    table = apsp(build_graph(gm))
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        save_table(table, Path(cache_dir) / f"{gm.map_id}.dtbl")
    return table


def save_table(table: DistanceTable, path: Path) -> None:
    """Binary cache: magic "DTBL1", u16 width, u16 height, then the
    row-major u16 little-endian matrix (0xFFFF = unreachable)."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HH", table.width, table.height))
        fh.write(table.matrix.astype("<u2").tobytes())


def load_table(path: Path) -> DistanceTable:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:5] != _MAGIC:
        raise MapError(f"{path} is not a distance table cache")
    width, height = struct.unpack("<HH", blob[5:9])
    n = width * height
    body = np.frombuffer(blob[9:], dtype="<u2")
    if body.size != n * n:
        raise MapError(f"{path} has a truncated distance matrix")
    return DistanceTable(width, height, body.reshape(n, n).astype(np.uint16))


@dataclass(frozen=True)
class PotentialContext:
    """Everything needed to evaluate the two potentials on one map.

    ``demo_cells`` must be sorted by cell id; nearest-demo ties resolve to
    the first (lowest-id) candidate so results are reproducible.
    """

    dist: DistanceTable
    demo_cells: tuple[Cell, ...]
    goal_cell: Cell
    gamma: float
    _demo_ids: np.ndarray = field(init=False, repr=False, compare=False)
    _demo_ecc: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.demo_cells:
            raise ValueError("demo_cells must be nonempty")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        ids = np.array([self.dist._cid(c) for c in self.demo_cells], dtype=np.int64)
        if not np.all(np.diff(ids) > 0):
            raise ValueError("demo_cells must be strictly sorted by cell id")
        ecc = np.array([self.dist.ecc(c) for c in self.demo_cells], dtype=np.int64)
        object.__setattr__(self, "_demo_ids", ids)
        object.__setattr__(self, "_demo_ecc", ecc)


def delta(ctx: PotentialContext, cell: Cell) -> float:
    """Closeness to the goal: 1 - d(cell,goal)/ecc(goal); 1 at the goal."""
    return 1.0 - ctx.dist.ratio_to(cell, ctx.goal_cell)


def phi(ctx: PotentialContext, cell: Cell) -> float:
    """Closeness to the nearest demonstrated cell.

    With s* the demo cell minimizing d(cell, .), returns
    1 - d(cell,s*)/ecc(s*); 1 when the cell itself was demonstrated.
    """
    row = ctx.dist.matrix[ctx.dist._cid(cell), ctx._demo_ids].astype(np.int64)
    k = int(np.argmin(row))  # first minimum = lowest cell id on ties
    dv = int(row[k])
    if dv == UNREACHABLE:
        raise UnreachableStateError(f"{cell} cannot reach any demonstrated cell")
    if dv == 0:
        return 1.0
    return 1.0 - dv / int(ctx._demo_ecc[k])
