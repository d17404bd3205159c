"""Vehicle-Dynamics D* Lite: incremental cost-to-goal maintenance over a
successor/predecessor graph, with the map-update repair protocol.

The solver is graph-generic: the vehicle lattice and the grid baseline
both plug in through the same small adapter surface (succ / pred_ids /
heuristic).  Keys follow the canonical D* Lite construction
k(s) = [min(g, rhs) + h(s, start) + k_m ; min(g, rhs)] with the k_m offset
accumulating the start's heuristic drift between repairs.
"""

from __future__ import annotations

import heapq
import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from .errors import SearchError, UnreachableGoalError
from .lattice import Lattice

INF = math.inf


class SearchGraph(Protocol):
    def succ(self, v: int) -> Iterable[tuple[int, float]]: ...
    def pred_ids(self, v: int) -> Iterable[int]: ...
    def heuristic(self, a: int, b: int) -> float: ...


@dataclass(frozen=True, order=True)
class Key:
    """Lexicographic priority; ties broken upstream by vertex id."""

    k1: float
    k2: float


class LatticeGraph:
    """Adapter exposing a Lattice as a SearchGraph with unit-cost-scaled
    Euclidean heuristic (admissible: J >= arc length >= straight distance)."""

    def __init__(self, lattice: Lattice):
        self.lattice = lattice

    def succ(self, v: int):
        return ((t, w) for t, w, _ in self.lattice.successor_weights(v))

    def pred_ids(self, v: int):
        return self.lattice.predecessor_ids(v)

    def heuristic(self, a: int, b: int) -> float:
        lat = self.lattice
        ia, ja, _ = lat.unpack(a)
        ib, jb, _ = lat.unpack(b)
        return math.hypot(ia - ib, ja - jb) * lat.stack.cell_size


def heuristic_cost(graph: SearchGraph, s: int, s_start: int, c_unit: float = 1.0) -> float:
    """Euclidean distance times the unit length cost (the J integrand's minimum)."""
    return graph.heuristic(s, s_start) * c_unit


@dataclass
class RepairStats:
    delta_cells: int = 0
    edges_touched: int = 0
    vertices_expanded: int = 0
    trigger: str | None = None  # "c_high" | "cost_increase" | "forced" | None
    searched: bool = False
    wall_time_ms: float = 0.0

    def as_json(self) -> dict:
        return {
            "delta_cells": self.delta_cells,
            "edges_touched": self.edges_touched,
            "vertices_expanded": self.vertices_expanded,
            "trigger": self.trigger,
            "searched": self.searched,
            "wall_time_ms": round(self.wall_time_ms, 3),
        }


class VdDstarLite:
    """Incremental backward search maintaining g / rhs values toward a goal."""

    def __init__(self, graph: SearchGraph, start: int, goal: int, *,
                 eps_rel: float = 0.05, repair_log=None):
        self.graph = graph
        self.start = start
        self.goal = goal
        self.eps_rel = eps_rel
        self.g: dict[int, float] = {}
        self.rhs: dict[int, float] = {goal: 0.0}
        self.km = 0.0
        self._heap: list[tuple[float, float, int, int]] = []
        self._entry: dict[int, int] = {}
        self._stamp = 0
        self.expansions_total = 0
        self.last_search_expansions = 0
        self._repair_log = repair_log
        self._push(goal, self.key(goal))

    # -- bookkeeping ---------------------------------------------------------

    def g_of(self, v: int) -> float:
        return self.g.get(v, INF)

    def rhs_of(self, v: int) -> float:
        return self.rhs.get(v, INF)

    def is_consistent(self, v: int) -> bool:
        return self.g_of(v) == self.rhs_of(v)

    def key(self, v: int) -> Key:
        m = min(self.g_of(v), self.rhs_of(v))
        if m == INF:
            return Key(INF, INF)
        return Key(m + heuristic_cost(self.graph, v, self.start) + self.km, m)

    def _push(self, v: int, key: Key):
        self._stamp += 1
        self._entry[v] = self._stamp
        heapq.heappush(self._heap, (key.k1, key.k2, v, self._stamp))

    def _remove(self, v: int):
        self._entry.pop(v, None)

    def _top(self):
        while self._heap:
            k1, k2, v, stamp = self._heap[0]
            if self._entry.get(v) == stamp:
                return Key(k1, k2), v
            heapq.heappop(self._heap)
        return None, None

    # -- core algorithm --------------------------------------------------------

    def update_vertex(self, v: int):
        if v != self.goal:
            best = INF
            for s, w in self.graph.succ(v):
                c = w + self.g_of(s)
                if c < best:
                    best = c
            if best == INF:
                self.rhs.pop(v, None)
            else:
                self.rhs[v] = best
        if self.g_of(v) != self.rhs_of(v):
            self._push(v, self.key(v))
        else:
            self._remove(v)

    def compute_shortest_path(self, max_expansions: int | None = None) -> bool:
        """Run until the start vertex is consistent or provably unreachable.

        Returns True when a finite-cost route to the goal exists.
        """
        expanded = 0
        while True:
            top_key, u = self._top()
            start_key = self.key(self.start)
            if top_key is None:
                break
            if not (
                (top_key.k1, top_key.k2, 0) < (start_key.k1, start_key.k2, 1)
                or self.rhs_of(self.start) != self.g_of(self.start)
            ):
                break
            if max_expansions is not None and expanded >= max_expansions:
                raise SearchError("expansion budget exhausted")
            k_new = self.key(u)
            if top_key < k_new:
                # stale entry from a k_m advance; reorder lazily
                self._push(u, k_new)
                continue
            expanded += 1
            if self.g_of(u) > self.rhs_of(u):
                self.g[u] = self.rhs_of(u)
                self._remove(u)
                for p in self.graph.pred_ids(u):
                    self.update_vertex(p)
            else:
                self.g.pop(u, None)
                self._remove(u)
                for p in self.graph.pred_ids(u):
                    self.update_vertex(p)
                self.update_vertex(u)
        self.expansions_total += expanded
        self.last_search_expansions = expanded
        return self.g_of(self.start) < INF

    # -- path extraction --------------------------------------------------------

    def extract_path(self) -> list[tuple[int, int, float]]:
        """Greedy descent (u, v, weight) edges from start to goal.

        Total extracted weight equals g(start); ties pick the lowest vertex id.
        """
        if self.g_of(self.start) == INF:
            raise UnreachableGoalError("no finite-cost route from start to goal")
        path = []
        v = self.start
        visited = {v}
        while v != self.goal:
            best_s, best_c, best_w = None, INF, INF
            for s, w in self.graph.succ(v):
                c = w + self.g_of(s)
                if c < best_c or (c == best_c and best_s is not None and s < best_s):
                    best_s, best_c, best_w = s, c, w
            if best_s is None or best_c == INF:
                raise SearchError("greedy descent hit a dead end; values inconsistent")
            path.append((v, best_s, best_w))
            v = best_s
            if v in visited:
                raise SearchError("greedy descent found a cycle; values inconsistent")
            visited.add(v)
        return path

    def path_cost(self, path) -> float:
        return math.fsum(w for _, _, w in path)

    # -- vehicle motion ---------------------------------------------------------

    def advance_start(self, new_start: int):
        """Re-anchor the search to the vehicle's current vertex, accumulating
        the heuristic drift into k_m so stale keys stay comparable."""
        if new_start == self.start:
            return
        self.km += heuristic_cost(self.graph, self.start, new_start)
        self.start = new_start

    # -- map updates -------------------------------------------------------------

    def on_map_update(
        self,
        new_stack,
        delta_cells,
        committed: "CommittedLatticePath | None" = None,
        *,
        force_search: bool = False,
    ) -> RepairStats:
        """Ingest changed cells, update touched edges, and repair when a
        trigger fires: a committed-path cell at/over c_high, or the committed
        path's cost rising by more than the epsilon fraction."""
        t0 = time.perf_counter()
        graph = self.graph
        if not isinstance(graph, LatticeGraph):
            raise SearchError("on_map_update requires a lattice-backed graph")
        lattice = graph.lattice
        pre_cost = committed.cached_cost if committed is not None else None
        pairs = lattice.apply_stack(new_stack, delta_cells)
        for u, v in pairs:
            self.update_vertex(u)
            self.update_vertex(v)
        stats = RepairStats(delta_cells=len(delta_cells), edges_touched=len(pairs))
        trigger = None
        if force_search:
            trigger = "forced"
        elif committed is not None:
            if committed.blocked_by(delta_cells, lattice):
                trigger = "c_high"
            else:
                post = committed.recompute_cost(lattice)
                if pre_cost is not None and post > pre_cost * (1.0 + self.eps_rel):
                    trigger = "cost_increase"
        if trigger is not None:
            stats.trigger = trigger
            stats.searched = True
            self.compute_shortest_path()
            stats.vertices_expanded = self.last_search_expansions
        stats.wall_time_ms = (time.perf_counter() - t0) * 1e3
        if self._repair_log is not None:
            self._repair_log.write(json.dumps(stats.as_json()) + "\n")
        return stats


class CommittedLatticePath:
    """A committed route over lattice edges, tracking the cells its footprint
    covers and its last known cost (the baseline for the epsilon trigger)."""

    def __init__(self, edges: list[tuple[int, int, float]], lattice: Lattice):
        self.edges = list(edges)
        self.cached_cost = math.fsum(w for _, _, w in self.edges)
        cells = set()
        for u, v, _ in self.edges:
            t = self._template_for(lattice, u, v)
            if t is None:
                continue
            i, j, _ = lattice.unpack(u)
            for di, dj in t.foot:
                cells.add((int(i + di), int(j + dj)))
        self.cells = cells

    @staticmethod
    def _template_for(lattice: Lattice, u: int, v: int):
        _, _, b = lattice.unpack(u)
        for t in lattice._templates_by_bin[b]:
            if u + (t.dci * lattice.nx + t.dcj) * lattice.bins + (t.end_bin - t.start_bin) == v:
                return t
        return None

    def blocked_by(self, delta_cells, lattice: Lattice) -> bool:
        adm = lattice.stack.admissibility(lattice.fail_safe)
        c_high = lattice.cfg.c_high
        for ci, cj in delta_cells:
            if (int(ci), int(cj)) in self.cells and adm[int(ci), int(cj)] >= c_high:
                return True
        return False

    def recompute_cost(self, lattice: Lattice) -> float:
        total = 0.0
        for u, v, _ in self.edges:
            hit = lattice.edge_between(u, v)
            if hit is None or math.isinf(hit[0]):
                return INF
            total += hit[0]
        return total
