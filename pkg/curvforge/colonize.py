"""
Space colonization growth of curvilinear trees and Murray's-law branch radii.

Nodes grow toward attractors laid on a jittered grid. Each attractor pulls only its
nearest node within the attraction distance; an attractor dies once any node comes
within the kill distance.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .curvmodels import CircleRegion, FixedPoints, GrowthConfig, SquareRegion
from .logging_config import get_logger
from .seeding import STREAM_OBSTACLES, growth_streams, make_rng

logger = get_logger(__name__)

# -----------------------------
#  growth constants
# -----------------------------

MIN_DIRECTION_NORM = 1e-9   # below this the averaged direction is degenerate
DUPLICATE_TOL = 1e-9        # same-position children of one node are suppressed
MAX_ROOT_DRAWS = 1000       # rejection-sampling budget for box roots
TIE_CANDIDATES = 4          # nearest candidates inspected for index tie-breaks


class RootRejectedError(ValueError):
    """A root lies outside the bound or inside an obstacle."""


# -----------------------------
#  types
# -----------------------------

@dataclass(frozen=True)
class Attractor:
    pos: tuple[float, float]
    alive: bool = True


@dataclass(frozen=True)
class CurveNode:
    pos: tuple[float, float]
    parent: int | None = None
    radius: float | None = None


@dataclass(frozen=True)
class CurveTree:
    """Grown forest of nodes; parents always precede their children."""

    nodes: tuple[CurveNode, ...] = ()
    config_hash: str = ""

    def __len__(self) -> int:
        return len(self.nodes)

    def positions(self) -> np.ndarray:
        if not self.nodes:
            return np.empty((0, 2))
        return np.array([n.pos for n in self.nodes], dtype=float)

    def parents(self) -> np.ndarray:
        return np.array([-1 if n.parent is None else n.parent for n in self.nodes], dtype=int)

    def child_counts(self) -> np.ndarray:
        counts = np.zeros(len(self.nodes), dtype=int)
        parents = self.parents()
        np.add.at(counts, parents[parents >= 0], 1)
        return counts

    def roots(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.parent is None]

    @property
    def has_radii(self) -> bool:
        return all(n.radius is not None for n in self.nodes)


CurveForest = list[CurveTree]


@dataclass(frozen=True)
class Geometry:
    """Bound and obstacles with every radius interval resolved."""

    bound: CircleRegion | SquareRegion
    obstacles: tuple[CircleRegion | SquareRegion, ...] = ()

    def admissible(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ok = self.bound.contains(pts)
        for obstacle in self.obstacles:
            ok &= ~obstacle.contains(pts)
        return ok

    def rejection_reason(self, pt: tuple[float, float]) -> str | None:
        arr = np.array([pt], dtype=float)
        if not self.bound.contains(arr)[0]:
            return "lies outside the bound"
        for k, obstacle in enumerate(self.obstacles):
            if obstacle.contains(arr)[0]:
                return f"lies inside obstacle #{k}"
        return None


def resolve_geometry(config: GrowthConfig, rng: np.random.Generator) -> Geometry:
    """Fix interval radii for one tree from the obstacle stream."""
    return Geometry(
        bound=config.bound.resolve(rng),
        obstacles=tuple(o.resolve(rng) for o in config.obstacles),
    )


def _default_geometry(config: GrowthConfig) -> Geometry:
    return resolve_geometry(config, make_rng(config.seed, STREAM_OBSTACLES))


# -----------------------------
#  attractors and roots
# -----------------------------

def _attractor_grid(
    config: GrowthConfig, rng: np.random.Generator, geometry: Geometry
) -> np.ndarray:
    g = config.attractor_grid
    x0, y0, x1, y1 = geometry.bound.bbox()
    cx = x0 + (np.arange(g) + 0.5) * (x1 - x0) / g
    cy = y0 + (np.arange(g) + 0.5) * (y1 - y0) / g

    #row-major: y outer, x inner
    gx, gy = np.meshgrid(cx, cy)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pts = pts + rng.uniform(-config.jitter, config.jitter, size=pts.shape)

    return pts[geometry.admissible(pts)]


def place_attractors(
    config: GrowthConfig,
    rng: np.random.Generator,
    geometry: Geometry | None = None,
) -> list[Attractor]:
    """Jittered A_g x A_g grid over the bound's bbox, minus anything outside bound or inside obstacles."""
    geometry = geometry or _default_geometry(config)
    pts = _attractor_grid(config, rng, geometry)
    return [Attractor(pos=(float(x), float(y))) for x, y in pts]


def init_roots(
    config: GrowthConfig,
    rng: np.random.Generator,
    geometry: Geometry | None = None,
) -> list[CurveNode]:
    geometry = geometry or _default_geometry(config)
    spec = config.roots

    if isinstance(spec, FixedPoints):
        roots = []
        for i, (x, y) in enumerate(spec.points):
            reason = geometry.rejection_reason((x, y))
            if reason:
                raise RootRejectedError(f"root #{i} at ({x}, {y}) {reason}")
            roots.append(CurveNode(pos=(float(x), float(y))))
        return roots

    last = None
    for _ in range(MAX_ROOT_DRAWS):
        x = float(rng.uniform(*spec.x_range))
        y = float(rng.uniform(*spec.y_range))
        last = (x, y)
        if geometry.rejection_reason(last) is None:
            return [CurveNode(pos=last)]

    raise RootRejectedError(
        f"no admissible root in box x={spec.x_range}, y={spec.y_range} after "
        f"{MAX_ROOT_DRAWS} draws; last draw ({last[0]:.2f}, {last[1]:.2f}) "
        f"{geometry.rejection_reason(last)}"
    )


# -----------------------------
#  nearest-node queries
# -----------------------------

def _hypot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.hypot(a[..., 0] - b[..., 0], a[..., 1] - b[..., 1])


def influencer_of(attractor: Attractor, tree: CurveTree, attraction_distance: float) -> int | None:
    """Nearest node within D_a, lowest index on ties."""
    if not tree.nodes:
        return None
    d = _hypot(tree.positions(), np.asarray(attractor.pos, dtype=float))
    within = d <= attraction_distance
    if not within.any():
        return None
    best = d[within].min()
    return int(np.flatnonzero(within & (d == best))[0])


def assign_influencers(
    attractors: np.ndarray, nodes: np.ndarray, attraction_distance: float
) -> np.ndarray:
    """Vectorised influencer_of: node index per attractor, -1 where none is in range."""
    m, n = len(attractors), len(nodes)
    owner = np.full(m, -1, dtype=int)
    if m == 0 or n == 0:
        return owner

    k = min(TIE_CANDIDATES, n)
    kd = cKDTree(nodes)
    _, idx = kd.query(attractors, k=k, distance_upper_bound=attraction_distance * (1 + 1e-9) + 1e-9)
    idx = idx.reshape(m, k)

    found = idx < n
    safe = np.where(found, idx, 0)
    dist = _hypot(attractors[:, None, :], nodes[safe])
    dist = np.where(found & (dist <= attraction_distance), dist, np.inf)

    best = dist.min(axis=1)
    hit = np.isfinite(best)
    tied = dist == best[:, None]
    owner[hit] = np.where(tied, safe, n).min(axis=1)[hit]

    #every candidate tied: more equidistant nodes may exist beyond k
    overflow = hit & tied.all(axis=1) & (k < n)
    for i in np.flatnonzero(overflow):
        d = _hypot(nodes, attractors[i])
        owner[i] = int(np.flatnonzero((d <= attraction_distance) & (d == d.min()))[0])

    return owner


# -----------------------------
#  growth state
# -----------------------------

@dataclass
class GrowthState:
    """Mutable tree + attractor set, only touched inside grow()."""

    geometry: Geometry
    attractors: np.ndarray
    alive: np.ndarray
    positions: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    parents: list[int] = field(default_factory=list)
    children: list[list[int]] = field(default_factory=list)
    size: int = 0

    @classmethod
    def start(
        cls, roots: list[CurveNode], attractors: np.ndarray, geometry: Geometry
    ) -> "GrowthState":
        state = cls(
            geometry=geometry,
            attractors=np.asarray(attractors, dtype=float).reshape(-1, 2),
            alive=np.ones(len(attractors), dtype=bool),
            positions=np.empty((max(64, 2 * len(roots)), 2)),
        )
        for root in roots:
            state.add_node(root.pos, None)
        return state

    def add_node(self, pos: tuple[float, float] | np.ndarray, parent: int | None) -> int:
        if self.size == len(self.positions):
            grown = np.empty((2 * len(self.positions), 2))
            grown[: self.size] = self.positions[: self.size]
            self.positions = grown
        self.positions[self.size] = pos
        self.parents.append(-1 if parent is None else parent)
        self.children.append([])
        if parent is not None:
            self.children[parent].append(self.size)
        self.size += 1
        return self.size - 1

    def node_array(self) -> np.ndarray:
        return self.positions[: self.size]

    def has_child_at(self, node: int, pos: np.ndarray) -> bool:
        for c in self.children[node]:
            if np.all(np.abs(self.positions[c] - pos) <= DUPLICATE_TOL):
                return True
        return False

    def alive_count(self) -> int:
        return int(self.alive.sum())

    def tree(self, config_hash: str = "") -> CurveTree:
        nodes = tuple(
            CurveNode(pos=(float(x), float(y)), parent=None if p < 0 else p)
            for (x, y), p in zip(self.node_array(), self.parents)
        )
        return CurveTree(nodes=nodes, config_hash=config_hash)


def kill_attractors(state: GrowthState, kill_distance: float) -> int:
    """Mark dead every alive attractor with a node within D_k; returns how many died."""
    alive_idx = np.flatnonzero(state.alive)
    if len(alive_idx) == 0 or state.size == 0:
        return 0
    nodes = state.node_array()
    pts = state.attractors[alive_idx]
    _, nearest = cKDTree(nodes).query(pts, k=1)
    doomed = _hypot(pts, nodes[nearest]) <= kill_distance
    state.alive[alive_idx[doomed]] = False
    return int(doomed.sum())


def grow_step(state: GrowthState, config: GrowthConfig) -> int:
    """One growth round; returns the number of spawned nodes."""
    alive_idx = np.flatnonzero(state.alive)
    spawned = 0

    if len(alive_idx) and state.size:
        nodes = state.node_array().copy()
        pts = state.attractors[alive_idx]
        owner = assign_influencers(pts, nodes, config.attraction_distance)

        hit = owner >= 0
        vec = pts[hit] - nodes[owner[hit]]
        norm = np.hypot(vec[:, 0], vec[:, 1])

        #an attractor sitting exactly on its node has no direction
        usable = norm > 0
        owners = owner[hit][usable]
        units = vec[usable] / norm[usable, None]

        sums = np.zeros_like(nodes)
        np.add.at(sums, owners, units)
        counts = np.bincount(owners, minlength=len(nodes))

        for node in np.flatnonzero(counts):
            if state.size >= config.max_nodes:
                break
            avg = sums[node] / counts[node]
            avg_norm = float(np.hypot(avg[0], avg[1]))
            if avg_norm < MIN_DIRECTION_NORM:
                continue
            child = nodes[node] + avg / avg_norm * config.segment_length
            if not state.geometry.admissible(child)[0]:
                continue
            if state.has_child_at(int(node), child):
                continue
            state.add_node(child, int(node))
            spawned += 1

    kill_attractors(state, config.kill_distance)
    return spawned


def grow(config: GrowthConfig) -> CurveTree:
    """Grow one tree; a pure function of the config (seed included)."""
    attractor_rng, root_rng, obstacle_rng = growth_streams(config.seed)
    geometry = resolve_geometry(config, obstacle_rng)

    attractors = _attractor_grid(config, attractor_rng, geometry)
    roots = init_roots(config, root_rng, geometry)
    state = GrowthState.start(roots, attractors, geometry)

    steps = 0
    while state.size < config.max_nodes:
        steps += 1
        if grow_step(state, config) == 0:
            break

    logger.debug(
        f"Grew {state.size} nodes from {len(roots)} roots in {steps} steps "
        f"({len(attractors)} attractors, {state.alive_count()} still alive)"
    )
    return state.tree(config.config_hash())


# -----------------------------
#  radii and forests
# -----------------------------

def compute_radii(tree: CurveTree, n: float = 3.0) -> CurveTree:
    """Murray's law from the tips: leaves get 1, parents (sum child r^n)^(1/n)."""
    if n <= 0:
        raise ValueError(f"Murray exponent must be > 0, got {n}")

    size = len(tree.nodes)
    parents = tree.parents()
    acc = np.zeros(size)
    nchild = np.zeros(size, dtype=int)
    last_child = np.full(size, -1)
    radii = np.empty(size)

    for i in range(size - 1, -1, -1):
        if nchild[i] == 0:
            r = 1.0
        elif nchild[i] == 1:
            r = radii[last_child[i]]
        else:
            r = acc[i] ** (1.0 / n)
        radii[i] = r

        p = parents[i]
        if p >= 0:
            acc[p] += r ** n
            nchild[p] += 1
            last_child[p] = i

    nodes = tuple(replace(node, radius=float(r)) for node, r in zip(tree.nodes, radii))
    return replace(tree, nodes=nodes)


def union_trees(a: CurveTree, b: CurveTree) -> CurveForest:
    """Forest holding both trees for joint rasterization; empty trees are dropped."""
    return [t for t in (a, b) if t.nodes]
