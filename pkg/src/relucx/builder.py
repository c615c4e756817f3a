"""Layer-by-layer enumeration of the cells of a ReLU network's input complex.

The complex is built one layer at a time.  The first layer is a plain
hyperplane arrangement, so its vertices are the solutions of all n_0-subsets
of the layer's equations.  Each later layer k contributes vertices inside
every region of the complex built so far: a vertex is the solution of l
new-layer equations together with n_0 - l equations of earlier layers, the
old equations being drawn from the zero sets of vertices incident to the
region, and a solution counts only if the signs of all remaining earlier
maps at it match the region's signs.  Zeros of the solved equations are
structural: they are recorded from the system, never thresholded from
evaluations.

Regions are never solved for directly; after every layer they are
regenerated as the all-nonzero completions of the vertex sign sequences,
which is exactly the top grade of the cube closure.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .model import ReluNetwork, node_map_values, node_map_value_matrix, region_affine_maps
from .signs import SignSequence, cube_completions

__all__ = [
    "Tolerances",
    "Vertex",
    "LayerBuildState",
    "CubeClosure",
    "DegenerateNetwork",
    "DuplicateMismatch",
    "ArchitectureUnsupported",
    "cube_closure",
    "first_layer_vertices",
    "extend_layer",
    "build_complex",
]


class DegenerateNetwork(Exception):
    """The network violates genericity/supertransversality at working precision."""


class DuplicateMismatch(Exception):
    """Two vertices share a sign sequence but disagree in coordinates."""


class ArchitectureUnsupported(Exception):
    """Architecture outside the builder's contract (needs n_1 >= n_0)."""


@dataclass(frozen=True)
class Tolerances:
    degeneracy_tol: float = 1e-8
    cond_max: float = 1e12
    residual_tol: float = 1e-6
    merge_tol: float = 1e-6  # scaled by (1 + |coords|) at the comparison site


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True, eq=False)
class Vertex:
    coords: np.ndarray
    signs: SignSequence
    zero_set: tuple[int, ...]  # flat node indices of the solved equations
    max_residual: float
    solve_condition: float


@dataclass
class LayerBuildState:
    """Complex data after processing layers 1..layer (sign prefixes of length covered)."""

    layer: int
    covered: int
    vertices: dict[SignSequence, Vertex] = field(default_factory=dict)
    regions: set[SignSequence] = field(default_factory=set)


CubeClosure = namedtuple("CubeClosure", ["graded", "regions"])


def cube_closure(vertex_signs) -> CubeClosure:
    """Close a set of vertex sequences under resolving zeros to +1/-1.

    Returns the cells graded by zero count together with the zero-zero grade
    (the top-dimensional regions) as a separate set.
    """
    graded: dict[int, set[SignSequence]] = {}
    for v in vertex_signs:
        for cell in cube_completions(v):
            graded.setdefault(cell.n_zeros(), set()).add(cell)
    return CubeClosure(graded, graded.get(0, set()))


def _region_incidence(vertices: dict[SignSequence, Vertex]) -> dict[SignSequence, list[Vertex]]:
    """Map each all-nonzero completion (region) to the vertices incident to it."""
    incidence: dict[SignSequence, list[Vertex]] = {}
    for key, vert in vertices.items():
        for region in cube_completions(key, values=(-1, 1)):
            incidence.setdefault(region, []).append(vert)
    return incidence


def _strict_sign(value: float, tol: Tolerances, context: str) -> int:
    if abs(value) < tol.degeneracy_tol:
        raise DegenerateNetwork(
            f"{context}: node map value {value:.3e} within degeneracy tolerance of 0"
        )
    return 1 if value > 0 else -1


def _vertex_rank(v: Vertex) -> tuple:
    # total order making duplicate resolution independent of discovery order
    return (v.max_residual, v.solve_condition, tuple(v.coords))


def _merge_vertex(table: dict[SignSequence, Vertex], cand: Vertex, tol: Tolerances) -> None:
    held = table.get(cand.signs)
    if held is None:
        table[cand.signs] = cand
        return
    scale = 1.0 + max(
        float(np.linalg.norm(held.coords)), float(np.linalg.norm(cand.coords))
    )
    gap = float(np.max(np.abs(held.coords - cand.coords)))
    if gap > tol.merge_tol * scale:
        raise DuplicateMismatch(
            f"sign sequence {cand.signs} held by two vertices {gap:.3e} apart"
        )
    if _vertex_rank(cand) < _vertex_rank(held):
        table[cand.signs] = cand


def first_layer_vertices(net: ReluNetwork, tol: Tolerances = DEFAULT_TOLERANCES) -> LayerBuildState:
    """Vertices and regions of the first-layer hyperplane arrangement.

    Every n_0-subset of the layer's hyperplanes must meet in a single
    well-conditioned point and every other first-layer map must be bounded
    away from zero there; otherwise the arrangement is not generic and the
    build aborts.
    """
    n0 = net.n0
    n1 = net.architecture[1]
    if n1 < n0:
        raise ArchitectureUnsupported(
            f"first hidden layer has {n1} units, needs at least n_0 = {n0}"
        )
    weights = net.layers[0].weights
    bias = net.layers[0].bias
    vertices: dict[SignSequence, Vertex] = {}
    for alpha in combinations(range(n1), n0):
        sub = weights[list(alpha)]
        cond = float(np.linalg.cond(sub))
        if not np.isfinite(cond) or cond > tol.cond_max:
            raise DegenerateNetwork(
                f"first layer: subsystem {alpha} has condition estimate {cond:.3e}"
            )
        x = np.linalg.solve(sub, -bias[list(alpha)])
        vals = weights @ x + bias
        residual = float(np.max(np.abs(vals[list(alpha)])))
        if residual > tol.residual_tol:
            raise DegenerateNetwork(
                f"first layer: subsystem {alpha} solved with residual {residual:.3e}"
            )
        entries = []
        for j in range(n1):
            if j in alpha:
                entries.append(0)
            else:
                entries.append(_strict_sign(vals[j], tol, f"first layer at {alpha}"))
        signs = SignSequence.from_entries(entries)
        vertices[signs] = Vertex(x, signs, alpha, residual, cond)
    closure_regions = cube_closure(vertices).regions
    return LayerBuildState(layer=1, covered=n1, vertices=vertices, regions=closure_regions)


def extend_layer(
    net: ReluNetwork,
    k: int,
    state: LayerBuildState,
    tol: Tolerances = DEFAULT_TOLERANCES,
    region_order=None,
) -> LayerBuildState:
    """Extend the complex over the node maps of layer k (k = depth+1 is the output map).

    Existing vertices keep their coordinates and gain strict signs for the new
    maps.  New vertices are solved region by region; the merge of results is
    order-independent, so any schedule over the regions yields the same state.
    """
    if k != state.layer + 1:
        raise ValueError(f"state covers layers 1..{state.layer}, cannot extend to layer {k}")
    n0 = net.n0
    base = net.layer_offset(k)
    if base != state.covered:
        raise ValueError("state prefix length does not match the network architecture")
    n_k = net.architecture[k]

    # (a) carry existing vertices over, extending their signs by evaluation
    carried: dict[SignSequence, Vertex] = {}
    if state.vertices:
        coords = np.array([v.coords for v in state.vertices.values()])
        vals = node_map_value_matrix(net, coords)[:, base : base + n_k]
        for row, vert in zip(vals, state.vertices.values()):
            tail = [
                _strict_sign(row[j], tol, f"layer {k} at existing vertex {vert.signs}")
                for j in range(n_k)
            ]
            signs = vert.signs.concat(tail)
            carried[signs] = Vertex(
                vert.coords, signs, vert.zero_set, vert.max_residual, vert.solve_condition
            )

    # (b) solve for new vertices inside every region of the current complex
    incidence = _region_incidence(state.vertices)
    if region_order is None:
        regions = sorted(state.regions)
    else:
        regions = list(region_order)
        if set(regions) != set(state.regions):
            raise ValueError("region_order must enumerate exactly the state's regions")
    discovered: dict[SignSequence, Vertex] = {}
    subset_sizes = [n0 - ell for ell in range(1, min(n0, n_k) + 1)]
    for region in regions:
        members = incidence.get(region, [])
        if not members:
            if n0 >= 2:
                raise DegenerateNetwork(
                    f"region {region} has no incident vertices to draw old equations from"
                )
            continue
        fns = region_affine_maps(net, region, k)
        old_normals = np.array([f.normal for f in fns[:base]])
        old_offsets = np.array([f.offset for f in fns[:base]])
        new_normals = np.array([f.normal for f in fns[base:]])
        new_offsets = np.array([f.offset for f in fns[base:]])
        region_entries = region.entries
        sign_arr = np.array(region_entries, dtype=float)

        olds_by_size: dict[int, set[tuple[int, ...]]] = {s: set() for s in subset_sizes}
        for vert in members:
            for s in subset_sizes:
                olds_by_size[s].update(combinations(vert.zero_set, s))

        for ell in range(1, min(n0, n_k) + 1):
            for new_subset in combinations(range(n_k), ell):
                m_new = new_normals[list(new_subset)]
                c_new = new_offsets[list(new_subset)]
                for old_subset in sorted(olds_by_size[n0 - ell]):
                    if old_subset:
                        mat = np.vstack([m_new, old_normals[list(old_subset)]])
                        rhs = np.concatenate([c_new, old_offsets[list(old_subset)]])
                    else:
                        mat, rhs = m_new, c_new
                    try:
                        x = np.linalg.solve(mat, -rhs)
                    except np.linalg.LinAlgError:
                        continue  # parallel within the region: no intersection here
                    if not np.all(np.isfinite(x)):
                        continue
                    # Structurally parallel systems (rank-deficient regions make
                    # new-layer functionals exact multiples of old ones) float
                    # through solve with det ~ eps and a pseudo-solution at
                    # ~1/eps scale.  Backward stability keeps |mat @ x + rhs|
                    # tiny for every genuine finite intersection, so a large
                    # absolute residual identifies "no intersection", not a
                    # tolerance failure.
                    residual = float(np.max(np.abs(mat @ x + rhs)))
                    if residual > tol.residual_tol:
                        continue
                    vals_old = old_normals @ x + old_offsets
                    remaining = np.ones(base, dtype=bool)
                    remaining[list(old_subset)] = False
                    near = np.abs(vals_old[remaining]) < tol.degeneracy_tol
                    if near.any():
                        raise DegenerateNetwork(
                            f"layer {k}, region {region}: remaining node map within "
                            f"degeneracy tolerance of 0 at a candidate vertex"
                        )
                    if not np.all(np.sign(vals_old[remaining]) == sign_arr[remaining]):
                        continue
                    # accepted: x is a vertex in the closure of this region
                    cond = float(np.linalg.cond(mat))
                    if not np.isfinite(cond) or cond > tol.cond_max:
                        raise DegenerateNetwork(
                            f"layer {k}, region {region}: accepted system has "
                            f"condition estimate {cond:.3e}"
                        )
                    vals_new = new_normals @ x + new_offsets
                    entries = [
                        0 if f in old_subset else region_entries[f] for f in range(base)
                    ]
                    for j in range(n_k):
                        if j in new_subset:
                            entries.append(0)
                        else:
                            entries.append(
                                _strict_sign(vals_new[j], tol, f"layer {k}, region {region}")
                            )
                    signs = SignSequence.from_entries(entries)
                    zero_set = tuple(sorted(old_subset)) + tuple(
                        base + j for j in new_subset
                    )
                    _merge_vertex(
                        discovered, Vertex(x, signs, zero_set, residual, cond), tol
                    )

    vertices = dict(carried)
    for signs, vert in discovered.items():
        if signs in vertices:  # cannot happen: carried keys have no layer-k zeros
            raise DuplicateMismatch(f"sign sequence {signs} already carried over")
        vertices[signs] = vert
    regions_new = cube_closure(vertices).regions
    return LayerBuildState(layer=k, covered=base + n_k, vertices=vertices, regions=regions_new)


def build_complex(net: ReluNetwork, tol: Tolerances = DEFAULT_TOLERANCES) -> LayerBuildState:
    """Run the full pipeline: first layer, hidden layers, then the output map."""
    state = first_layer_vertices(net, tol)
    for k in range(2, net.depth + 2):
        state = extend_layer(net, k, state, tol)
    return state
