"""Network-on-interposer graphs over a chiplet placement grid.

Surface chiplets sit on a rows x cols grid and fill it along a canonical
order (row-major, or serpentine for Floret), so the occupied cells are always
a prefix of that order. Each surface chiplet owns one router. An embedded
chiplet hangs under a surface chiplet and reaches the rest of the system
through a single vertical link.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, InternalError, UndefinedInputError

KINDS = ("Mesh", "Kite", "HexaMesh", "Floret")

LATERAL, VERTICAL = "lateral", "vertical"

Cell = tuple[int, int]


def canonical_order(kind: str, rows: int, cols: int) -> tuple[Cell, ...]:
    """Cell visiting order: boustrophedon for Floret, row-major otherwise."""
    _check_kind(kind)
    if kind == "Floret":
        return tuple((r, c if r % 2 == 0 else cols - 1 - c) for r in range(rows) for c in range(cols))
    return tuple((r, c) for r in range(rows) for c in range(cols))


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ConfigurationError(f"unknown topology kind {kind!r}; expected one of {KINDS}")


@dataclass(frozen=True)
class Placement:
    """Chiplet types laid along the canonical order of a grid.

    ``surface[p]`` is the catalog index of the chiplet at canonical position
    ``p``; ``embedded`` lists ``(host position, catalog index)`` pairs sorted by
    host.
    """

    rows: int
    cols: int
    pitch_mm: float
    kind: str
    surface: tuple[int, ...]
    embedded: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        _check_kind(self.kind)
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError("placement grid must be non-empty")
        if len(self.surface) > self.rows * self.cols:
            raise ConfigurationError(
                f"{len(self.surface)} surface chiplets do not fit a {self.rows}x{self.cols} grid")
        emb = tuple(sorted((int(h), int(t)) for h, t in self.embedded))
        hosts = [h for h, _ in emb]
        if len(set(hosts)) != len(hosts):
            raise ConfigurationError("at most one embedded chiplet per cell")
        if any(not 0 <= h < len(self.surface) for h in hosts):
            raise ConfigurationError("embedded chiplet without a surface chiplet above it")
        object.__setattr__(self, "surface", tuple(int(t) for t in self.surface))
        object.__setattr__(self, "embedded", emb)

    @property
    def grid_dims(self) -> tuple[int, int]:
        return self.rows, self.cols

    @cached_property
    def order(self) -> tuple[Cell, ...]:
        return canonical_order(self.kind, self.rows, self.cols)

    @property
    def n_surface(self) -> int:
        return len(self.surface)

    @property
    def n_embedded(self) -> int:
        return len(self.embedded)

    @property
    def n_chiplets(self) -> int:
        return self.n_surface + self.n_embedded

    def cell(self, pos: int) -> Cell:
        return self.order[pos]

    @property
    def cells(self) -> dict[tuple[Cell, str], int]:
        """Map (cell, layer) -> catalog index, layer in {"surface", "embedded"}."""
        out = {(self.order[p], "surface"): t for p, t in enumerate(self.surface)}
        out.update({(self.order[h], "embedded"): t for h, t in self.embedded})
        return out

    def instance_types(self) -> list[int]:
        """Catalog index per chiplet instance: surface positions first, then embedded."""
        return list(self.surface) + [t for _, t in self.embedded]

    def instance_cells(self) -> list[Cell]:
        return [self.order[p] for p in range(self.n_surface)] + [self.order[h] for h, _ in self.embedded]

    def instance_is_embedded(self) -> list[bool]:
        return [False] * self.n_surface + [True] * self.n_embedded

    def canonical_instances(self) -> list[int]:
        """Instance ids in mapping order: each surface chiplet followed by the one beneath it."""
        under = {h: self.n_surface + k for k, (h, _) in enumerate(self.embedded)}
        seq = []
        for p in range(self.n_surface):
            seq.append(p)
            if p in under:
                seq.append(under[p])
        return seq

    def counts(self, n_types: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        surf = [0] * n_types
        emb = [0] * n_types
        for t in self.surface:
            surf[t] += 1
        for _, t in self.embedded:
            emb[t] += 1
        return tuple(surf), tuple(emb)

    def consumes(self, comp) -> bool:
        """True when the placement holds exactly the composition's chiplets."""
        return self.counts(len(comp)) == (comp.surface_counts, comp.embedded_counts)

    def key(self) -> tuple:
        return (self.kind, self.rows, self.cols, self.surface, self.embedded)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "pitch_mm": self.pitch_mm,
            "kind": self.kind,
            "surface": list(self.surface),
            "embedded": [list(e) for e in self.embedded],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Placement":
        return cls(int(d["rows"]), int(d["cols"]), float(d["pitch_mm"]), d["kind"],
                   tuple(d["surface"]), tuple(tuple(e) for e in d.get("embedded", ())))


def interleave(counts: Sequence[int]) -> list[int]:
    """Spread types evenly along a sequence (largest-deficit first, ties by type)."""
    n = sum(counts)
    placed = [0] * len(counts)
    seq = []
    for p in range(n):
        deficit = [counts[i] * (p + 1) / n - placed[i] if placed[i] < counts[i] else -math.inf
                   for i in range(len(counts))]
        best = max(range(len(counts)), key=lambda i: (deficit[i], -i))
        placed[best] += 1
        seq.append(best)
    return seq


def grid_for(n_surface: int) -> tuple[int, int]:
    """Smallest near-square grid holding ``n_surface`` chiplets."""
    cols = max(1, math.ceil(math.sqrt(n_surface)))
    rows = max(1, math.ceil(n_surface / cols))
    return rows, cols


def hosts_by_distance(rows: int, cols: int, kind: str, n_surface: int) -> list[int]:
    """Surface positions sorted farthest-from-centre first (embedding preference)."""
    order = canonical_order(kind, rows, cols)
    cr, cc = (rows - 1) / 2, (cols - 1) / 2
    return sorted(range(n_surface),
                  key=lambda p: (-((order[p][0] - cr) ** 2 + (order[p][1] - cc) ** 2), p))


def canonical_placement(comp, kind: str, rows: int, cols: int, pitch_mm: float) -> Placement:
    """Baseline placement: interleaved surface types, embedded chiplets under the outermost cells."""
    surface = interleave(comp.surface_counts)
    hosts = hosts_by_distance(rows, cols, kind, len(surface))
    emb_types = [t for t, n in enumerate(comp.embedded_counts) for _ in range(n)]
    if len(emb_types) > len(hosts):
        raise ConfigurationError("more embedded chiplets than surface chiplets to host them")
    embedded = tuple(zip(hosts[:len(emb_types)], emb_types))
    return Placement(rows, cols, pitch_mm, kind, tuple(surface), embedded)


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    length_mm: float
    kind: str = LATERAL


@dataclass(frozen=True)
class NoiGraph:
    kind: str
    n_surface: int
    edges: tuple[Edge, ...]
    cells: tuple[Cell, ...]
    embedded_hosts: tuple[int, ...] = ()
    _surface_hops: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return self.n_surface + len(self.embedded_hosts)

    @cached_property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for e in self.edges:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
        for a in adj:
            a.sort()
        return adj

    def q_matrix(self) -> np.ndarray:
        """Direct-link indicator Q_ij."""
        q = np.zeros((self.n_nodes, self.n_nodes), dtype=np.int8)
        for e in self.edges:
            q[e.u, e.v] = q[e.v, e.u] = 1
        return q

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def lateral_degree(self, node: int) -> int:
        return sum(1 for e in self.edges if e.kind == LATERAL and node in (e.u, e.v))

    @cached_property
    def lateral_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_surface, dtype=int)
        for e in self.edges:
            if e.kind == LATERAL:
                deg[e.u] += 1
                deg[e.v] += 1
        return deg

    def average_ports(self) -> float:
        """Mean lateral router ports over surface routers."""
        if self.n_surface == 0:
            return 0.0
        return float(self.lateral_degrees.mean())

    def link_length_per_node(self) -> np.ndarray:
        """Summed lateral link length (mm) attached to each surface router."""
        out = np.zeros(self.n_surface)
        for e in self.edges:
            if e.kind == LATERAL:
                out[e.u] += e.length_mm
                out[e.v] += e.length_mm
        return out

    @property
    def n_lateral_links(self) -> int:
        return sum(1 for e in self.edges if e.kind == LATERAL)

    @cached_property
    def hops(self) -> np.ndarray:
        """All-pairs hop counts over surface and embedded nodes."""
        surf = self._surface_hops if self._surface_hops is not None else bfs_all_pairs(
            self.n_surface, [(e.u, e.v) for e in self.edges if e.kind == LATERAL])
        n_s, n = self.n_surface, self.n_nodes
        if n == n_s:
            return surf
        rep = np.concatenate([np.arange(n_s), np.asarray(self.embedded_hosts, dtype=int)])
        offset = np.concatenate([np.zeros(n_s, dtype=int), np.ones(n - n_s, dtype=int)])
        h = surf[np.ix_(rep, rep)] + offset[:, None] + offset[None, :]
        np.fill_diagonal(h, 0)
        return h

    @cached_property
    def vertical_hops(self) -> np.ndarray:
        """Vertical segments on the shortest path between each pair."""
        n_s, n = self.n_surface, self.n_nodes
        offset = np.concatenate([np.zeros(n_s, dtype=int), np.ones(n - n_s, dtype=int)])
        v = offset[:, None] + offset[None, :]
        np.fill_diagonal(v, 0)
        return v


def shortest_hops(g: NoiGraph, i: int, j: int) -> int:
    h = int(g.hops[i, j])
    if h < 0:
        raise InternalError(f"nodes {i} and {j} are disconnected")
    return h


def bfs_all_pairs(n: int, edges: Sequence[tuple[int, int]]) -> np.ndarray:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    out = np.full((n, n), -1, dtype=int)
    for s in range(n):
        row = out[s]
        row[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            du = row[u] + 1
            for v in adj[u]:
                if row[v] < 0:
                    row[v] = du
                    q.append(v)
    if n and (out < 0).any():
        raise InternalError("NoI graph is disconnected")
    return out


def average_hop_count(g: NoiGraph, traffic: np.ndarray) -> float:
    """Traffic-weighted mean hop count over communicating pairs."""
    f = np.asarray(traffic, dtype=float)
    if f.shape != (g.n_nodes, g.n_nodes):
        raise ConfigurationError(f"traffic shape {f.shape} does not match {g.n_nodes} nodes")
    if (f < 0).any():
        raise ConfigurationError("traffic must be non-negative")
    total = f.sum()
    if total <= 0:
        raise UndefinedInputError("average hop count is undefined for all-zero traffic")
    return float((f * g.hops).sum() / total)


def _line_links(n: int, stride: int) -> list[tuple[int, int]]:
    """Degree-2 ring over a line of n cells with the wraparound folded into skips."""
    if n <= 1:
        return []
    if n == 2:
        return [(0, 1)]
    if stride == 1:
        return [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)]
    links = [(i, i + 2) for i in range(n - 2)]
    links += [(0, 1), (n - 2, n - 1)]
    return sorted(set(links))


@lru_cache(maxsize=256)
def _surface_links(kind: str, rows: int, cols: int, n_surface: int,
                   kite_stride: int, floret_hub_interval: int) -> tuple[tuple[int, int], ...]:
    order = canonical_order(kind, rows, cols)
    pos = {cell: p for p, cell in enumerate(order[:n_surface])}
    links: set[tuple[int, int]] = set()

    def link(a: Cell, b: Cell):
        if a in pos and b in pos and a != b:
            u, v = pos[a], pos[b]
            links.add((min(u, v), max(u, v)))

    if kind in ("Mesh", "HexaMesh"):
        for r in range(rows):
            for c in range(cols):
                link((r, c), (r, c + 1))
                link((r, c), (r + 1, c))
        if kind == "HexaMesh":
            # brick offset: odd rows sit half a pitch right; the first and last
            # rows keep straight links only
            for r in range(1, rows - 2):
                for c in range(cols):
                    link((r, c), (r + 1, c - 1 if r % 2 == 0 else c + 1))
    elif kind == "Kite":
        for r in range(rows):
            for a, b in _line_links(cols, kite_stride):
                link((r, a), (r, b))
        for c in range(cols):
            for a, b in _line_links(rows, kite_stride):
                link((a, c), (b, c))
    else:  # Floret
        for p in range(n_surface - 1):
            link(order[p], order[p + 1])
        if floret_hub_interval > 0:
            for p in range(0, n_surface, floret_hub_interval):
                r, c = order[p]
                link((r, c), (r + 1, c))
    return tuple(sorted(links))


@lru_cache(maxsize=256)
def _surface_hops_cached(kind: str, rows: int, cols: int, n_surface: int,
                         kite_stride: int, floret_hub_interval: int) -> np.ndarray:
    links = _surface_links(kind, rows, cols, n_surface, kite_stride, floret_hub_interval)
    h = bfs_all_pairs(n_surface, links)
    h.setflags(write=False)
    return h


def build_topology(kind: str, placement: Placement, *, kite_stride: int = 2,
                   floret_hub_interval: int = 8, vertical_length_mm: float = 0.1) -> NoiGraph:
    """Build the NoI over the placement's occupied cells.

    Mesh links the four grid neighbours. Kite folds each row/column ring into
    fixed-stride skip links so every interior router keeps four ports. HexaMesh
    adds one brick-offset diagonal per row pair on top of the mesh. Floret
    chains routers along the serpentine curve and adds a shortcut to the next
    row every ``floret_hub_interval`` positions.
    """
    _check_kind(kind)
    if kite_stride not in (1, 2):
        raise ConfigurationError("kite_stride must be 1 (plain torus) or 2 (folded)")
    rows, cols = placement.rows, placement.cols
    n_s = placement.n_surface
    order = canonical_order(kind, rows, cols)
    links = _surface_links(kind, rows, cols, n_s, kite_stride, floret_hub_interval)
    edges = []
    for u, v in links:
        (r1, c1), (r2, c2) = order[u], order[v]
        edges.append(Edge(u, v, (abs(r1 - r2) + abs(c1 - c2)) * placement.pitch_mm, LATERAL))
    hosts = tuple(h for h, _ in placement.embedded)
    for k, h in enumerate(hosts):
        edges.append(Edge(h, n_s + k, vertical_length_mm, VERTICAL))
    surf_hops = _surface_hops_cached(kind, rows, cols, n_s, kite_stride, floret_hub_interval) if n_s else np.zeros((0, 0), dtype=int)
    return NoiGraph(kind, n_s, tuple(edges), tuple(order[:n_s]), hosts, surf_hops)


def full_grid_graph(kind: str, rows: int, cols: int, pitch_mm: float = 1.0, **kw) -> NoiGraph:
    """Topology with every grid cell occupied (used for whole-grid port and hop statistics)."""
    placement = Placement(rows, cols, pitch_mm, kind, (0,) * (rows * cols))
    return build_topology(kind, placement, **kw)
