"""Ground-truth mazes, shared knowledge maps, and the occluding sensor model.

Grids are small (tens of cells per side) row-major numpy arrays. A maze cell
is either free (0) or an obstacle (1); agent occupancy is runtime state kept
by the engine, never stored in the maze. Knowledge maps add -1 for cells no
agent has seen yet.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

Coord = tuple[int, int]  # (row, col)

FREE = 0
OBSTACLE = 1
UNEXPLORED = -1
AGENT_MARK = 2  # serialization overlay only, never a stored cell state

ORTHO_STEPS = ((-1, 0), (1, 0), (0, -1), (0, 1))  # up, down, left, right

_CROSS = ndimage.generate_binary_structure(2, 1)  # 4-connectivity


class Maze:
    """Immutable ground-truth grid of FREE / OBSTACLE cells."""

    __slots__ = ("cells", "_rows")

    def __init__(self, cells) -> None:
        arr = np.array(cells, dtype=np.int8)
        if arr.ndim != 2:
            raise ValueError("maze cells must be a 2D grid")
        if not np.isin(arr, (FREE, OBSTACLE)).all():
            raise ValueError("maze cells must be FREE (0) or OBSTACLE (1)")
        if not (arr == FREE).any():
            raise ValueError("maze must contain at least one free cell")
        arr.setflags(write=False)
        self.cells = arr
        self._rows = arr.tolist()  # plain lists for hot loops

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def in_bounds(self, pos: Coord) -> bool:
        r, c = pos
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, pos: Coord) -> bool:
        return self._rows[pos[0]][pos[1]] == FREE

    def free_cells(self) -> list[Coord]:
        """All free coordinates in row-major order."""
        return [tuple(rc) for rc in np.argwhere(self.cells == FREE)]

    def to_text(self) -> str:
        """Serialize as 'width height' header plus '.'/'#' rows."""
        lines = [f"{self.width} {self.height}"]
        for row in self._rows:
            lines.append("".join("." if v == FREE else "#" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Maze":
        width, height, rows = _parse_grid_text(text, {".": FREE, "#": OBSTACLE})
        return cls(np.array(rows, dtype=np.int8).reshape(height, width))

    def __eq__(self, other) -> bool:
        return isinstance(other, Maze) and np.array_equal(self.cells, other.cells)

    def __repr__(self) -> str:
        return f"Maze({self.width}x{self.height})"


class KnowledgeMap:
    """Explored-state grid: UNEXPLORED (-1), known FREE (0), known OBSTACLE (1).

    Known entries always mirror ground truth (sensing copies the maze) and
    cells never revert to UNEXPLORED.
    """

    __slots__ = ("cells",)

    def __init__(self, cells) -> None:
        arr = np.array(cells, dtype=np.int8)
        if arr.ndim != 2:
            raise ValueError("knowledge map cells must be a 2D grid")
        if not np.isin(arr, (UNEXPLORED, FREE, OBSTACLE)).all():
            raise ValueError("knowledge cells must be -1, 0 or 1")
        self.cells = arr

    @classmethod
    def blank(cls, width: int, height: int) -> "KnowledgeMap":
        return cls(np.full((height, width), UNEXPLORED, dtype=np.int8))

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def in_bounds(self, pos: Coord) -> bool:
        r, c = pos
        return 0 <= r < self.height and 0 <= c < self.width

    def state(self, pos: Coord) -> int:
        return int(self.cells[pos])

    def known_count(self) -> int:
        return int((self.cells != UNEXPLORED).sum())

    def copy(self) -> "KnowledgeMap":
        return KnowledgeMap(self.cells.copy())

    def to_text(self, agents: tuple[Coord, ...] = ()) -> str:
        """Serialize with '?' for unexplored and a '2' overlay on agent cells."""
        chars = {UNEXPLORED: "?", FREE: ".", OBSTACLE: "#"}
        rows = [[chars[v] for v in row] for row in self.cells.tolist()]
        for r, c in agents:
            rows[r][c] = str(AGENT_MARK)
        lines = [f"{self.width} {self.height}"]
        lines.extend("".join(row) for row in rows)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "KnowledgeMap":
        mapping = {"?": UNEXPLORED, ".": FREE, "#": OBSTACLE, str(AGENT_MARK): FREE}
        width, height, rows = _parse_grid_text(text, mapping)
        return cls(np.array(rows, dtype=np.int8).reshape(height, width))

    def __eq__(self, other) -> bool:
        return isinstance(other, KnowledgeMap) and np.array_equal(self.cells, other.cells)

    def __repr__(self) -> str:
        return f"KnowledgeMap({self.width}x{self.height}, known={self.known_count()})"


def _parse_grid_text(text: str, mapping: dict[str, int]) -> tuple[int, int, list[int]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty grid text")
    try:
        width, height = (int(tok) for tok in lines[0].split())
    except Exception as exc:
        raise ValueError(f"bad grid header {lines[0]!r}") from exc
    if len(lines) != height + 1:
        raise ValueError(f"expected {height} grid rows, got {len(lines) - 1}")
    values: list[int] = []
    for ln in lines[1:]:
        if len(ln) != width:
            raise ValueError(f"row {ln!r} does not have width {width}")
        for ch in ln:
            if ch not in mapping:
                raise ValueError(f"unknown grid character {ch!r}")
            values.append(mapping[ch])
    return width, height, values


# ---------------------------------------------------------------------------
# Maze generation


def generate_maze(width: int, height: int, obstacle_keep_prob: float, rng_seed: int) -> Maze:
    """Generate a random maze; deterministic for a fixed seed.

    Starts from an all-obstacle grid, carves a random orthogonal walk until
    half of the cells are free, then keeps each remaining obstacle with
    probability ``obstacle_keep_prob`` (so 0.85 gives a dense maze, 0.15 a
    sparse one). Two repair passes make full exploration possible: free
    cells are reduced to their largest orthogonally connected component, and
    a short corridor is carved to any obstacle cell left without a free
    orthogonal neighbour, since such a cell could never be observed by a
    sight-line sensor and would block 100% coverage.
    """
    if width < 3 or height < 3:
        raise ValueError(f"maze dimensions must be at least 3x3, got {width}x{height}")
    if not 0.0 <= obstacle_keep_prob <= 1.0:
        raise ValueError(f"obstacle_keep_prob must be in [0, 1], got {obstacle_keep_prob}")

    rng = np.random.default_rng(rng_seed)
    cells = np.full((height, width), OBSTACLE, dtype=np.int8)

    # Random orthogonal walk carves 50% of all cells.
    target = (width * height) // 2
    r = int(rng.integers(height))
    c = int(rng.integers(width))
    cells[r, c] = FREE
    carved = 1
    while carved < target:
        dr, dc = ORTHO_STEPS[rng.integers(4)]
        nr, nc = r + dr, c + dc
        if not (0 <= nr < height and 0 <= nc < width):
            continue
        r, c = nr, nc
        if cells[r, c] == OBSTACLE:
            cells[r, c] = FREE
            carved += 1

    # Probabilistic thinning of the remaining obstacles.
    keep_draw = rng.random(size=cells.shape)
    cells[(cells == OBSTACLE) & (keep_draw >= obstacle_keep_prob)] = FREE

    _keep_largest_free_component(cells)
    _expose_buried_obstacles(cells)
    return Maze(cells)


def _keep_largest_free_component(cells: np.ndarray) -> None:
    """Convert all free cells outside the largest 4-connected component."""
    labels, count = ndimage.label(cells == FREE, structure=_CROSS)
    if count <= 1:
        return
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0  # background
    keep = sizes.argmax()  # ties resolve to the first label in scan order
    cells[(labels != 0) & (labels != keep)] = OBSTACLE


def _expose_buried_obstacles(cells: np.ndarray) -> None:
    """Carve corridors so every obstacle touches free space orthogonally.

    An obstacle with no free orthogonal neighbour is invisible to the
    sensor model (every sight line to it crosses another obstacle) and is
    not adjacent to any reachable cell, so coverage could never hit 100%.
    For each such buried cell we carve the shortest orthogonal corridor
    from the existing free region up to (but not including) the cell.
    Carving only adds free cells next to the main component, so the single
    free component invariant is preserved and no new cell becomes buried.
    """
    height, width = cells.shape
    buried = _buried_obstacles(cells)
    if not buried:
        return
    parents = _corridor_parents(cells)
    for target in buried:
        if not _is_buried(cells, target):
            continue  # an earlier corridor already exposed it
        path = []
        cur = parents.get(target)
        while cur is not None and cells[cur] == OBSTACLE:
            path.append(cur)
            cur = parents.get(cur)
        for pos in path:
            cells[pos] = FREE


def _buried_obstacles(cells: np.ndarray) -> list[Coord]:
    free = cells == FREE
    exposed = np.zeros_like(free)
    exposed[1:, :] |= free[:-1, :]
    exposed[:-1, :] |= free[1:, :]
    exposed[:, 1:] |= free[:, :-1]
    exposed[:, :-1] |= free[:, 1:]
    return [tuple(rc) for rc in np.argwhere((cells == OBSTACLE) & ~exposed)]


def _is_buried(cells: np.ndarray, pos: Coord) -> bool:
    height, width = cells.shape
    r, c = pos
    for dr, dc in ORTHO_STEPS:
        nr, nc = r + dr, c + dc
        if 0 <= nr < height and 0 <= nc < width and cells[nr, nc] == FREE:
            return False
    return True


def _corridor_parents(cells: np.ndarray) -> dict[Coord, Coord | None]:
    """BFS tree over the whole grid rooted at the free region (row-major seeds)."""
    from collections import deque

    height, width = cells.shape
    parents: dict[Coord, Coord | None] = {}
    queue = deque()
    for rc in np.argwhere(cells == FREE):
        pos = tuple(rc)
        parents[pos] = None
        queue.append(pos)
    while queue:
        r, c = queue.popleft()
        for dr, dc in ORTHO_STEPS:
            nb = (r + dr, c + dc)
            if 0 <= nb[0] < height and 0 <= nb[1] < width and nb not in parents:
                parents[nb] = (r, c)
                queue.append(nb)
    return parents


# ---------------------------------------------------------------------------
# Sensing


def ray_cells(a: Coord, b: Coord) -> list[Coord]:
    """Integer line from a to b inclusive (Bresenham midpoint walk)."""
    r0, c0 = a
    r1, c1 = b
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    err = dc - dr
    cells = []
    r, c = r0, c0
    while True:
        cells.append((r, c))
        if r == r1 and c == c1:
            return cells
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr


def visible_square(
    pos: Coord, view_range: int, height: int, width: int, opaque
) -> list[Coord]:
    """Coords visible from pos within a Chebyshev square of radius view_range.

    A cell is visible when no strictly intermediate cell of the rounded
    segment from pos satisfies ``opaque(r, c)``. Opaque cells are themselves
    visible (a sensor reports the wall it hits); pos is always visible.
    """
    r0, c0 = pos
    out = []
    for r in range(max(0, r0 - view_range), min(height, r0 + view_range + 1)):
        for c in range(max(0, c0 - view_range), min(width, c0 + view_range + 1)):
            for mr, mc in ray_cells(pos, (r, c))[1:-1]:
                if opaque(mr, mc):
                    break
            else:
                out.append((r, c))
    return out


def sense(maze: Maze, kmap: KnowledgeMap, pos: Coord, view_range: int) -> list[Coord]:
    """Reveal ground truth around pos into kmap; returns newly revealed coords.

    Obstacles block sight beyond themselves but are revealed when hit.
    """
    if view_range < 1:
        raise ValueError(f"view_range must be >= 1, got {view_range}")
    if not maze.in_bounds(pos):
        raise ValueError(f"sense position {pos} out of bounds")
    if not maze.is_free(pos):
        raise ValueError(f"sense position {pos} is on an obstacle")
    if (kmap.height, kmap.width) != (maze.height, maze.width):
        raise ValueError("knowledge map dimensions do not match maze")

    rows = maze._rows
    km = kmap.cells
    newly = []
    for r, c in visible_square(pos, view_range, maze.height, maze.width,
                               lambda mr, mc: rows[mr][mc] == OBSTACLE):
        if km[r, c] == UNEXPLORED:
            km[r, c] = rows[r][c]
            newly.append((r, c))
    return newly


def merge_maps(dst: KnowledgeMap, src: KnowledgeMap) -> KnowledgeMap:
    """Fold src's knowledge into dst (in place); already known cells keep their value."""
    if dst.cells.shape != src.cells.shape:
        raise ValueError(
            f"cannot merge maps of different shapes {dst.cells.shape} vs {src.cells.shape}"
        )
    unknown = dst.cells == UNEXPLORED
    dst.cells[unknown] = src.cells[unknown]
    return dst


def coverage(kmap: KnowledgeMap) -> float:
    """Fraction of cells that are known (0.0 .. 1.0)."""
    return kmap.known_count() / kmap.cells.size
