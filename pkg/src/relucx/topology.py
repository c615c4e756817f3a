"""Cell complex assembly, mod-2 boundary maps, and decision-boundary topology.

Cells are reconstructed from vertex sign sequences by cube closure, graded by
dimension (n_0 minus the zero count), and boundary matrices over GF(2) are
read off combinatorially: a facet of a cell is the same sequence with one
nonzero entry set to 0, provided that sequence is itself a cell.

The decision boundary is the subcomplex of cells whose output entry is 0.
Its one-point compactification adds a single vertex at infinity; every edge
contributes one GF(2) unit to the infinity row per missing endpoint (an edge
missing both endpoints contributes none, mod 2), and higher cells get no
infinity term since a k-cell with k >= 2 has trivial mod-2 incidence with a
0-cell.  Betti numbers come from bit-packed Gaussian elimination.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import ReluNetwork, node_map_values, region_affine_maps
from .signs import SignSequence
from .builder import cube_closure

__all__ = [
    "CubicalComplex",
    "ChainComplexGF2",
    "BettiReport",
    "ClosureViolation",
    "BoundaryInconsistent",
    "assemble",
    "validate_closure",
    "boundary_matrices",
    "decision_boundary",
    "compactify",
    "betti_gf2",
    "gf2_rank",
    "render_db_svg",
]


class ClosureViolation(Exception):
    """A cell's forced face is missing from the complex."""


class BoundaryInconsistent(Exception):
    """Consecutive boundary matrices do not compose to zero over GF(2)."""


@dataclass(frozen=True)
class CubicalComplex:
    """Cells keyed by sign sequence, graded by cell dimension 0..n0."""

    n0: int
    cells: Mapping[SignSequence, int]
    grading: tuple[tuple[SignSequence, ...], ...]

    def dim_counts(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.grading)


@dataclass(frozen=True)
class ChainComplexGF2:
    """dims[k] cells in grade k; boundaries[k-1] holds the columns of d_k.

    A column is an int bitmask over the (k-1)-grade cell indices.  When
    has_infinity is set, grade 0 includes one extra cell (the point at
    infinity) at the last index.
    """

    dims: tuple[int, ...]
    boundaries: tuple[tuple[int, ...], ...]
    has_infinity: bool = False


@dataclass(frozen=True)
class BettiReport:
    betti: tuple[int, ...]
    bounded: int
    unbounded: int


def assemble(vertex_signs: Iterable[SignSequence]) -> CubicalComplex:
    """Full complex generated by the vertices: cube closure, graded and indexed."""
    verts = list(vertex_signs)
    if not verts:
        raise ValueError("cannot assemble a complex from zero vertices")
    n0 = verts[0].n_zeros()
    for v in verts:
        if v.n_zeros() != n0:
            raise ValueError(
                f"vertex {v} has {v.n_zeros()} zeros, expected {n0} on every vertex"
            )
    closure = cube_closure(verts)
    grading = []
    for dim in range(n0 + 1):
        grade = closure.graded.get(n0 - dim, set())
        grading.append(tuple(sorted(grade)))
    cells: dict[SignSequence, int] = {}
    idx = 0
    for grade in grading:
        for seq in grade:
            cells[seq] = idx
            idx += 1
    cx = CubicalComplex(n0, cells, tuple(grading))
    validate_closure(cx)
    return cx


def validate_closure(cx: CubicalComplex) -> None:
    """Check that resolving any single zero of any cell lands on a present cell."""
    for seq in cx.cells:
        for p in seq.zero_positions():
            for v in (1, -1):
                face = seq.replace(p, v)
                if face not in cx.cells:
                    raise ClosureViolation(f"cell {seq} is missing its face {face}")


def _facet_column(seq: SignSequence, rows: Mapping[SignSequence, int]) -> tuple[int, int]:
    """Bitmask of present facets (one nonzero entry zeroed) and their count."""
    col = 0
    count = 0
    zero_set = set(seq.zero_positions())
    for p in range(seq.n):
        if p in zero_set:
            continue
        facet = seq.replace(p, 0)
        row = rows.get(facet)
        if row is not None:
            col ^= 1 << row
            count += 1
    return col, count


def boundary_matrices(cx: CubicalComplex) -> ChainComplexGF2:
    """Mod-2 boundary maps of the complex as given (no compactification)."""
    dims = cx.dim_counts()
    boundaries = []
    for k in range(1, len(cx.grading)):
        rows = {seq: i for i, seq in enumerate(cx.grading[k - 1])}
        cols = []
        for seq in cx.grading[k]:
            col, _ = _facet_column(seq, rows)
            cols.append(col)
        boundaries.append(tuple(cols))
    return ChainComplexGF2(dims, tuple(boundaries), has_infinity=False)


def decision_boundary(cx: CubicalComplex) -> CubicalComplex:
    """Subcomplex of cells whose output-map entry (the last one) is zero."""
    grading = []
    for grade in cx.grading:
        grading.append(tuple(seq for seq in grade if seq.entry(seq.n - 1) == 0))
    cells: dict[SignSequence, int] = {}
    idx = 0
    for grade in grading:
        for seq in grade:
            cells[seq] = idx
            idx += 1
    return CubicalComplex(cx.n0, cells, tuple(grading))


def compactify(db: CubicalComplex) -> ChainComplexGF2:
    """Chain complex of the one-point compactification of the decision boundary.

    Grades run 0..n0-1 (the boundary has no n0-cells).  The extra 0-cell at
    infinity occupies the last grade-0 index.
    """
    n0 = db.n0
    if any(db.grading[n0]):
        raise ValueError("decision boundary cannot contain top-dimensional cells")
    vert_rows = {seq: i for i, seq in enumerate(db.grading[0])}
    inf_row = len(vert_rows)
    dims = [len(vert_rows) + 1]
    boundaries = []
    for k in range(1, n0):
        dims.append(len(db.grading[k]))
        rows = vert_rows if k == 1 else {s: i for i, s in enumerate(db.grading[k - 1])}
        cols = []
        for seq in db.grading[k]:
            col, count = _facet_column(seq, rows)
            if k == 1:
                assert count <= 2, f"edge {seq} has {count} vertex facets"
                if (2 - count) % 2 == 1:
                    col ^= 1 << inf_row
            cols.append(col)
        boundaries.append(tuple(cols))
    return ChainComplexGF2(tuple(dims), tuple(boundaries), has_infinity=True)


def gf2_rank(columns: Sequence[int]) -> int:
    """Rank of a set of GF(2) vectors given as int bitmasks."""
    pivots: list[int] = []
    rank = 0
    for vec in columns:
        for p in pivots:
            vec = min(vec, vec ^ p)
        if vec:
            pivots.append(vec)
            pivots.sort(reverse=True)
            rank += 1
    return rank


def _check_dd_zero(chain: ChainComplexGF2) -> None:
    for k in range(1, len(chain.boundaries)):
        lower = chain.boundaries[k - 1]
        for col in chain.boundaries[k]:
            acc = 0
            bits = col
            while bits:
                low = bits & -bits
                acc ^= lower[low.bit_length() - 1]
                bits ^= low
            if acc:
                raise BoundaryInconsistent(
                    f"d_{k} . d_{k + 1} has a nonzero column over GF(2)"
                )


def betti_gf2(chain: ChainComplexGF2) -> BettiReport:
    """Mod-2 Betti numbers plus bounded/unbounded component counts.

    bounded = b_0 - 1 and unbounded = b_top - b_0 + 1: all unbounded pieces
    of the boundary merge through the point at infinity, which also accounts
    for the extra component when the boundary is empty.
    """
    _check_dd_zero(chain)
    ranks = [gf2_rank(cols) for cols in chain.boundaries]
    betti = []
    top = len(chain.dims) - 1
    for k in range(top + 1):
        rk = ranks[k - 1] if k >= 1 else 0
        rk1 = ranks[k] if k < len(ranks) else 0
        betti.append(chain.dims[k] - rk - rk1)
    b0 = betti[0]
    return BettiReport(tuple(betti), bounded=b0 - 1, unbounded=betti[top] - b0 + 1)


# ---------------------------------------------------------------------------
# SVG rendering of two-dimensional decision boundaries


def _clip_segment(p: np.ndarray, q: np.ndarray, lo: float, hi: float):
    """Liang-Barsky clip of segment p->q to the square [lo, hi]^2."""
    d = q - p
    t0, t1 = 0.0, 1.0
    for axis in range(2):
        for side, bound in ((-1.0, lo), (1.0, hi)):
            denom = side * d[axis]
            dist = side * (bound - p[axis])
            if denom == 0.0:
                if dist < 0.0:
                    return None
                continue
            t = dist / denom
            if denom < 0.0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
            if t0 > t1:
                return None
    return p + t0 * d, p + t1 * d


def render_db_svg(
    net: ReluNetwork,
    vertex_coords: Mapping[SignSequence, np.ndarray],
    db: CubicalComplex,
    box: tuple[float, float],
    path: str,
    size: int = 600,
) -> None:
    """Draw the decision boundary of a 2-input network, clipped to [lo, hi]^2."""
    if net.n0 != 2:
        raise ValueError("SVG rendering is only defined for n_0 = 2")
    lo, hi = float(box[0]), float(box[1])
    if not hi > lo:
        raise ValueError("box must satisfy lo < hi")
    span = hi - lo
    scale = size / span

    def to_svg(pt: np.ndarray) -> tuple[float, float]:
        return ((pt[0] - lo) * scale, (hi - pt[1]) * scale)

    segments = []
    for seq in db.grading[1]:
        prefix = SignSequence.from_entries(seq.entries[:-1])
        fn = region_affine_maps(net, prefix, net.depth + 1)[-1]
        normal = fn.normal
        norm = float(np.linalg.norm(normal))
        if norm == 0.0:
            continue
        direction = np.array([-normal[1], normal[0]]) / norm
        ends = []
        for p in range(seq.n - 1):
            facet = seq.replace(p, 0)
            if facet in vertex_coords:
                ends.append(np.asarray(vertex_coords[facet], dtype=float))
        reach = 4.0 * span + 4.0 * max((float(np.max(np.abs(e))) for e in ends), default=0.0)
        if len(ends) == 2:
            a, b = ends
        elif len(ends) == 1:
            v = ends[0]
            eps = 1e-4 * span
            probe = node_map_values(net, v + eps * direction)
            hidden_ok = all(
                (probe[i] > 0) == (seq.entry(i) > 0) for i in range(seq.n - 1)
            )
            d = direction if hidden_ok else -direction
            a, b = v, v + reach * d
        else:
            center = np.array([(lo + hi) / 2.0, (lo + hi) / 2.0])
            foot = center - normal * (fn.value(center)) / (norm * norm)
            a, b = foot - reach * direction, foot + reach * direction
        clipped = _clip_segment(a, b, lo, hi)
        if clipped is not None:
            segments.append((seq, clipped))

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white" '
        f'stroke="black" stroke-width="1"/>',
    ]
    for seq, (a, b) in segments:
        (x1, y1), (x2, y2) = to_svg(a), to_svg(b)
        lines.append(
            f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
            f'stroke="black" stroke-width="1.5"><title>{seq}</title></line>'
        )
    for seq in db.grading[0]:
        pt = vertex_coords.get(seq)
        if pt is None:
            continue
        x, y = to_svg(np.asarray(pt, dtype=float))
        if 0.0 <= x <= size and 0.0 <= y <= size:
            lines.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="3" fill="black"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
