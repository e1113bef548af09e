""" Grid-world path planning as an improvisation instance.

A map is a rectangle of cells. Each cell has a traversal cost and at most
one marker:

    S  start            E  end
    O  drop-off point   C  charging station
    X  impassable

Rows are separated by newlines or `` / ``, cells by whitespace. A token is
an optional marker followed by the cell cost, e.g. ``S0 2 X C1 / 1 O3 0 E0``.
A marker without digits costs 0. A map whose rows are single unspaced
strings, not all of them valid tokens, is read one character per cell:
``S1 / 1E`` is a 2x2 map with single-digit costs.

Paths are words over N, E, S, W. A path is valid when it starts at S, ends
at E, visits every drop-off, enters at least one charging station and never
leaves the grid or enters an X cell. Its label is the first station entered
(stations are numbered 1.. in row-major order) and its cost is the sum of
the costs of every cell occupied, the start cell included.
"""

import logging
import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .automata import Dfa, StateOutputDfa, WeightedDfa, explore
from .core import LqciInstance
from .errors import MalformedMapError, MarkerCountError, NonRectangularError, TooManyDropoffsError, TooManyStationsError

logger = logging.getLogger(__name__)

MOVES = {"N": (-1, 0), "E": (0, 1), "S": (1, 0), "W": (0, -1)}
ALPHABET = ("N", "E", "S", "W")

MAX_DROPOFFS = 16
MAX_STATIONS = 64

_TOKEN = re.compile(r"^([SEOCX]?)(\d*)$")
_DEAD = "dead"

Cell = Tuple[int, int]


@dataclass(frozen=True)
class GridMap:
    """ A parsed grid map. Cells are (row, column), row 0 at the top.
    """

    costs: Tuple[Tuple[int, ...], ...]
    markers: Tuple[Tuple[str, ...], ...]

    @property
    def height(self) -> int:
        return len(self.costs)

    @property
    def width(self) -> int:
        return len(self.costs[0])

    def cells(self, marker: str) -> List[Cell]:
        """ Cells carrying ``marker``, in row-major order.
        """
        return [(r, c) for r, row in enumerate(self.markers) for c, m in enumerate(row) if m == marker]

    @property
    def start(self) -> Cell:
        return self.cells("S")[0]

    @property
    def end(self) -> Cell:
        return self.cells("E")[0]

    @property
    def dropoffs(self) -> List[Cell]:
        return self.cells("O")

    @property
    def stations(self) -> List[Cell]:
        return self.cells("C")

    def cost(self, cell: Cell) -> int:
        return self.costs[cell[0]][cell[1]]

    def passable(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width and self.markers[r][c] != "X"

    def move(self, cell: Cell, symbol: str) -> Optional[Cell]:
        """ Neighbour in direction ``symbol``, None if off-grid or blocked.
        """
        dr, dc = MOVES[symbol]
        target = (cell[0] + dr, cell[1] + dc)
        return target if self.passable(target) else None

    def to_text(self) -> str:
        rows = []
        for costs, markers in zip(self.costs, self.markers):
            rows.append(" ".join(f"{m}{c}" for c, m in zip(costs, markers)))
        return "\n".join(rows) + "\n"


def parse_map(text: str, max_cost: Optional[int] = None, require_station: bool = True) -> GridMap:
    """ Parses and validates a map.

    Blank lines and lines starting with ``#`` are ignored. With
    ``require_station`` off a map without charging stations is accepted; its
    hard automaton accepts nothing.

    Raises:
        MalformedMapError: A token is not marker + digits, or a cost exceeds ``max_cost``.
        NonRectangularError: Rows differ in length.
        MarkerCountError: Not exactly one S and one E, or no C while one is required.
    """
    rows = []
    for line in text.replace(" / ", "\n").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append(line.split())
    if not rows:
        raise MalformedMapError("Map is empty.")
    if all(len(row) == 1 for row in rows) and not all(_TOKEN.match(row[0].upper()) for row in rows):
        rows = [list(row[0]) for row in rows]

    costs, markers = [], []
    for r, row in enumerate(rows):
        cost_row, marker_row = [], []
        for c, token in enumerate(row):
            match = _TOKEN.match(token.upper())
            if not match:
                raise MalformedMapError(f"Bad token {token!r} at row {r}, column {c}.")
            marker, digits = match.groups()
            if not marker and not digits:
                raise MalformedMapError(f"Bad token {token!r} at row {r}, column {c}.")
            cost = int(digits) if digits else 0
            if max_cost is not None and cost > max_cost:
                raise MalformedMapError(f"Cost {cost} at row {r}, column {c} exceeds {max_cost}.")
            cost_row.append(cost)
            marker_row.append(marker)
        costs.append(tuple(cost_row))
        markers.append(tuple(marker_row))

    if len({len(row) for row in costs}) != 1:
        raise NonRectangularError(f"Row lengths differ: {[len(row) for row in costs]}.")

    grid = GridMap(tuple(costs), tuple(markers))
    for marker, name in (("S", "start"), ("E", "end")):
        found = len(grid.cells(marker))
        if found != 1:
            raise MarkerCountError(f"Expected exactly one {name} marker {marker}, found {found}.")
    if require_station and not grid.stations:
        raise MarkerCountError("Expected at least one charging station C.")
    return grid


def encode(grid: GridMap) -> Tuple[Dfa, StateOutputDfa, WeightedDfa]:
    """ Compiles a map into hard, label and cost automata over N, E, S, W.

    Only reachable states are built. The hard DFA tracks (cell, visited
    drop-off mask, charged); the label DFA tracks (cell, first station);
    the cost DFA tracks the cell. Leaving the grid or entering X leads to a
    dead state.

    Raises:
        TooManyDropoffsError: More than 16 drop-off points.
        TooManyStationsError: More than 64 charging stations.
    """
    dropoffs = {cell: 1 << j for j, cell in enumerate(grid.dropoffs)}
    stations = {cell: j + 1 for j, cell in enumerate(grid.stations)}
    if len(dropoffs) > MAX_DROPOFFS:
        raise TooManyDropoffsError(f"{len(dropoffs)} drop-off points, at most {MAX_DROPOFFS} are supported.")
    if len(stations) > MAX_STATIONS:
        raise TooManyStationsError(f"{len(stations)} charging stations, at most {MAX_STATIONS} are supported.")
    full = (1 << len(dropoffs)) - 1
    start, end = grid.start, grid.end

    def hard_step(key, symbol):
        if key == _DEAD:
            return _DEAD
        cell, mask, charged = key
        target = grid.move(cell, symbol)
        if target is None:
            return _DEAD
        return target, mask | dropoffs.get(target, 0), charged or target in stations

    hard, _ = explore(
        ALPHABET,
        (start, dropoffs.get(start, 0), start in stations),
        hard_step,
        lambda key: key != _DEAD and key[0] == end and key[1] == full and key[2],
    )

    def label_step(key, symbol):
        if key == _DEAD:
            return _DEAD
        cell, first = key
        target = grid.move(cell, symbol)
        if target is None:
            return _DEAD
        return target, first or stations.get(target, 0)

    label_dfa, label_keys = explore(ALPHABET, (start, stations.get(start, 0)), label_step, lambda key: True)
    label = StateOutputDfa(label_dfa, tuple(0 if key == _DEAD else key[1] for key in label_keys))

    def cost_step(cell, symbol):
        if cell == _DEAD:
            return _DEAD
        target = grid.move(cell, symbol)
        return _DEAD if target is None else target

    cost_dfa, cost_keys = explore(ALPHABET, start, cost_step, lambda key: True)
    cost = WeightedDfa(cost_dfa, tuple(0 if key == _DEAD else grid.cost(key) for key in cost_keys))

    logger.info(
        "Encoded %dx%d map: hard %d states, label %d states, cost %d states.",
        grid.height, grid.width, hard.num_states, label_dfa.num_states, cost_dfa.num_states,
    )
    return hard, label, cost


def map_instance(grid: GridMap, m: int, n: int, c, lam, rho, alpha, beta, labels: Sequence[int] = None) -> LqciInstance:
    """ Instance over a map; labels default to every charging station.
    """
    hard, label, cost = encode(grid)
    return LqciInstance(
        alphabet=ALPHABET,
        m=m,
        n=n,
        hard=hard,
        cost=cost,
        label=label,
        labels=tuple(labels) if labels else tuple(range(1, len(grid.stations) + 1)),
        c=c,
        lam=lam,
        rho=rho,
        alpha=alpha,
        beta=beta,
    )


@dataclass(frozen=True)
class Replay:
    """ A path walked on the map, independently of the automata.
    """

    cells: Tuple[Cell, ...]
    blocked: bool
    cost: int
    first_station: int
    visited_dropoffs: bool
    at_end: bool

    @property
    def valid(self) -> bool:
        return not self.blocked and self.at_end and self.visited_dropoffs and self.first_station > 0


def replay(grid: GridMap, word: Sequence[str]) -> Replay:
    """ Walks ``word`` from the start cell and records what happened.
    """
    stations = {cell: j + 1 for j, cell in enumerate(grid.stations)}
    cell = grid.start
    cells = [cell]
    cost = grid.cost(cell)
    first = stations.get(cell, 0)
    for symbol in word:
        target = grid.move(cell, symbol)
        if target is None:
            return Replay(tuple(cells), True, cost, first, False, False)
        cell = target
        cells.append(cell)
        cost += grid.cost(cell)
        first = first or stations.get(cell, 0)
    return Replay(tuple(cells), False, cost, first, set(grid.dropoffs) <= set(cells), cell == grid.end)


def render_path(grid: GridMap, word: Sequence[str]) -> str:
    """ Draws the map with the cells of a path marked by ``*``.

    Markers stay visible; ``#`` is an impassable cell, ``.`` an unvisited one.
    """
    visited = set(replay(grid, word).cells)
    lines = []
    for r in range(grid.height):
        row = []
        for c in range(grid.width):
            marker = grid.markers[r][c]
            if marker == "X":
                row.append("#")
            elif marker:
                row.append(marker.lower() if (r, c) in visited and marker in "OC" else marker)
            else:
                row.append("*" if (r, c) in visited else ".")
        lines.append(" ".join(row))
    return "\n".join(lines)
