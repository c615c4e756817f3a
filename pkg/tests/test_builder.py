"""Vertex enumeration: frozen hand values, brute-force oracles, invariants."""

import itertools

import numpy as np
import pytest

from relucx import (
    AffineLayer,
    ArchitectureUnsupported,
    DegenerateNetwork,
    DuplicateMismatch,
    ReluNetwork,
    Tolerances,
    Vertex,
    build_complex,
    cube_closure,
    extend_layer,
    first_layer_vertices,
    is_face,
    random_init,
)
from relucx.builder import _merge_vertex
from relucx.signs import SignSequence

S = SignSequence.from_entries


# ---------------------------------------------------------------------------
# hand example: identity first layer, output relu(x) + relu(y) - 1


def test_hand_example_vertices(hand_net):
    state = build_complex(hand_net)
    assert len(state.vertices) == 3
    expect = {
        S([0, 0, -1]): ((0.0, 0.0), (0, 1)),
        S([0, 1, 0]): ((0.0, 1.0), (0, 2)),
        S([1, 0, 0]): ((1.0, 0.0), (1, 2)),
    }
    assert set(state.vertices) == set(expect)
    for signs, (coords, zero_set) in expect.items():
        v = state.vertices[signs]
        assert np.allclose(v.coords, coords, atol=1e-12)
        assert tuple(sorted(v.zero_set)) == zero_set


def test_hand_example_closure_counts(hand_net):
    state = build_complex(hand_net)
    closure = cube_closure(state.vertices)
    assert len(closure.graded[2]) == 3  # vertices
    assert len(closure.graded[1]) == 9  # edges
    assert len(closure.graded[0]) == 7  # regions
    assert closure.regions == closure.graded[0]
    assert state.regions == closure.regions


# ---------------------------------------------------------------------------
# first layer as a plain hyperplane arrangement


def test_identity_arrangement():
    net = ReluNetwork(
        (2, 2, 1),
        (AffineLayer(np.eye(2), np.zeros(2)), AffineLayer(np.ones((1, 2)), np.ones(1))),
    )
    state = first_layer_vertices(net)
    assert list(state.vertices) == [S([0, 0])]
    v = state.vertices[S([0, 0])]
    assert np.allclose(v.coords, [0.0, 0.0], atol=1e-12)
    assert state.regions == {S([1, 1]), S([1, -1]), S([-1, 1]), S([-1, -1])}


def test_three_generic_lines():
    net = random_init((2, 3, 1), 0)
    state = first_layer_vertices(net)
    closure = cube_closure(state.vertices)
    assert len(closure.graded[2]) == 3
    assert len(closure.graded[1]) == 9
    assert len(closure.graded[0]) == 7


def test_single_layer_counts_match_arrangement_combinatorics():
    from math import comb

    for n0, n1 in itertools.product((2, 3), range(3, 9)):
        if n1 < n0:
            continue
        for seed in range(10):
            state = first_layer_vertices(random_init((n0, n1, 1), seed))
            assert len(state.vertices) == comb(n1, n0)
            assert len(state.regions) == sum(comb(n1, i) for i in range(n0 + 1))


def test_first_layer_coords_match_cramer_oracle():
    net = random_init((2, 5, 1), 12)
    w, b = net.layers[0].weights, net.layers[0].bias
    oracle = []
    for i, j in itertools.combinations(range(5), 2):
        det = w[i, 0] * w[j, 1] - w[i, 1] * w[j, 0]
        x = (-b[i] * w[j, 1] + b[j] * w[i, 1]) / det
        y = (-w[i, 0] * b[j] + w[j, 0] * b[i]) / det
        oracle.append((x, y))
    got = sorted((float(v.coords[0]), float(v.coords[1])) for v in first_layer_vertices(net).vertices.values())
    for (gx, gy), (ox, oy) in zip(got, sorted(oracle)):
        assert abs(gx - ox) < 1e-9 and abs(gy - oy) < 1e-9


def test_euler_relation_single_layer():
    for n1, seed in ((3, 1), (4, 2), (5, 3), (8, 4)):
        state = first_layer_vertices(random_init((2, n1, 1), seed))
        closure = cube_closure(state.vertices)
        v = len(closure.graded.get(2, ()))
        e = len(closure.graded.get(1, ()))
        r = len(closure.graded.get(0, ()))
        assert v - e + r == 1


# ---------------------------------------------------------------------------
# full builds against an independent enumeration


def brute_force_full_vertices(net, lo=-20.0, hi=20.0, res=400):
    """Vertex keys of a (2,n1,1) build found without the layer-wise solver.

    First-layer vertices are all line-pair crossings; boundary vertices come
    from solving {output functional on region r} = 0 against each line, with
    the region functionals composed directly and candidates kept only if all
    uncrossed lines match r's signs strictly.
    """
    w1, b1 = net.layers[0].weights, net.layers[0].bias
    w2, b2 = net.layers[1].weights, net.layers[1].bias
    n1 = w1.shape[0]
    axes = np.linspace(lo, hi, res)
    gx, gy = np.meshgrid(axes, axes, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    z1 = pts @ w1.T + b1
    keep = np.all(np.abs(z1) > 1e-6, axis=1)
    patterns = {tuple(row) for row in np.where(z1[keep] > 0, 1, -1).tolist()}

    keys = {}
    for i, j in itertools.combinations(range(n1), 2):
        x = np.linalg.solve(w1[[i, j]], -b1[[i, j]])
        vals = w1 @ x + b1
        entries = [0 if t in (i, j) else (1 if vals[t] > 0 else -1) for t in range(n1)]
        out = float((w2 @ np.maximum(vals, 0.0) + b2)[0])
        keys[tuple(entries) + ((1 if out > 0 else -1),)] = x
    for pat in sorted(patterns):
        mask = np.array([1.0 if s > 0 else 0.0 for s in pat])
        gn = (w2 @ (mask[:, None] * w1))[0]
        go = float((w2 @ (mask * b1) + b2)[0])
        for j in range(n1):
            mat = np.array([w1[j], gn])
            if abs(np.linalg.det(mat)) < 1e-9:
                continue
            x = np.linalg.solve(mat, -np.array([b1[j], go]))
            vals = w1 @ x + b1
            ok = all(
                abs(vals[t]) > 1e-8 and (vals[t] > 0) == (pat[t] > 0)
                for t in range(n1)
                if t != j
            )
            if ok:
                entries = [0 if t == j else pat[t] for t in range(n1)]
                keys[tuple(entries) + (0,)] = x
    return {S(list(k)): v for k, v in keys.items()}


@pytest.mark.parametrize("seed", [5, 6, 7, 21])
def test_full_build_matches_brute_force(seed):
    net = random_init((2, 5, 1), seed)
    state = build_complex(net)
    oracle = brute_force_full_vertices(net)
    assert set(state.vertices) == set(oracle)
    for signs, x in oracle.items():
        assert np.allclose(state.vertices[signs].coords, x, atol=1e-8)


# ---------------------------------------------------------------------------
# structural invariants of built states


@pytest.mark.parametrize("arch,seed", [((2, 5, 1), 1), ((2, 4, 4, 1), 9), ((3, 5, 1), 2)])
def test_vertex_invariants(arch, seed):
    net = random_init(arch, seed)
    state = build_complex(net)
    tol = Tolerances()
    assert state.covered == net.num_node_maps
    for signs, v in state.vertices.items():
        assert v.signs == signs
        assert len(v.zero_set) == net.n0
        assert signs.zero_positions() == tuple(sorted(v.zero_set))
        assert v.max_residual <= tol.residual_tol
        assert np.isfinite(v.solve_condition)
    coords = np.array([v.coords for v in state.vertices.values()])
    if len(coords) > 1:
        gaps = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
        gaps[np.diag_indices(len(coords))] = np.inf
        assert float(gaps.min()) > 1e-7


@pytest.mark.parametrize("arch,seed", [((2, 5, 1), 1), ((2, 4, 4, 1), 9)])
def test_closure_purity_and_region_incidence(arch, seed):
    state = build_complex(random_init(arch, seed))
    closure = cube_closure(state.vertices)
    verts = list(state.vertices)
    for zeros, grade in closure.graded.items():
        for cell in grade:
            assert cell.n_zeros() == zeros
            assert any(is_face(v, cell) for v in verts)
    for region in state.regions:
        assert any(is_face(v, region) for v in verts)


def test_single_vertex_cube_closure():
    closure = cube_closure([S([0, 0])])
    assert {z: len(g) for z, g in closure.graded.items()} == {2: 1, 1: 4, 0: 4}
    assert sum(len(g) for g in closure.graded.values()) == 9


def test_schedule_independence():
    net = random_init((2, 5, 5, 1), 3)
    state1 = first_layer_vertices(net)
    rng = np.random.default_rng(0)

    def orders(state):
        base = sorted(state.regions)
        yield base
        yield list(reversed(base))
        for _ in range(3):
            perm = list(base)
            rng.shuffle(perm)
            yield perm

    outcomes = []
    for order2 in orders(state1):
        state2 = extend_layer(net, 2, state1, region_order=order2)
        state3 = extend_layer(net, 3, state2)
        outcomes.append(state3)
    ref = outcomes[0]
    for other in outcomes[1:]:
        assert set(other.vertices) == set(ref.vertices)
        assert other.regions == ref.regions
        for signs, v in other.vertices.items():
            assert np.allclose(v.coords, ref.vertices[signs].coords, atol=1e-9)


def test_dead_unit_build_succeeds():
    net = random_init((2, 5, 5, 1), 4)
    w2 = net.layers[1].weights.copy()
    b2 = net.layers[1].bias.copy()
    w2[0] = np.abs(w2[0])  # nonnegative input weights + huge bias: unit never fires zero
    b2[0] = 1000.0
    dead = ReluNetwork(net.architecture, (net.layers[0], AffineLayer(w2, b2), net.layers[2]))
    state = build_complex(dead)
    flat = dead.layer_offset(2)  # the modified unit's node index
    assert state.vertices
    for signs in state.vertices:
        assert signs.entry(flat) == 1


# ---------------------------------------------------------------------------
# failure modes


def test_duplicate_hyperplane_is_degenerate():
    net = ReluNetwork(
        (2, 3, 1),
        (
            AffineLayer(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.zeros(3)),
            AffineLayer(np.ones((1, 3)), np.ones(1)),
        ),
    )
    with pytest.raises(DegenerateNetwork):
        first_layer_vertices(net)


def test_near_parallel_hyperplanes_exceed_cond_max():
    net = ReluNetwork(
        (2, 2, 1),
        (
            AffineLayer(np.array([[1.0, 0.0], [1.0, 1e-14]]), np.array([0.0, 1.0])),
            AffineLayer(np.ones((1, 2)), np.ones(1)),
        ),
    )
    with pytest.raises(DegenerateNetwork):
        first_layer_vertices(net)


def test_output_through_first_layer_vertex_is_degenerate():
    # relu(x) + relu(y) vanishes at the arrangement vertex (0,0)
    net = ReluNetwork(
        (2, 2, 1),
        (AffineLayer(np.eye(2), np.zeros(2)), AffineLayer(np.ones((1, 2)), np.zeros(1))),
    )
    with pytest.raises(DegenerateNetwork):
        build_complex(net)


def test_concurrent_bent_hyperplanes_are_degenerate():
    # both layer-2 units cross x=0 at (0,1): three curves through one point
    net = ReluNetwork(
        (2, 2, 2, 1),
        (
            AffineLayer(np.eye(2), np.zeros(2)),
            AffineLayer(np.array([[1.0, 1.0], [2.0, -1.0]]), np.array([-1.0, 1.0])),
            AffineLayer(np.ones((1, 2)), np.array([0.3])),
        ),
    )
    with pytest.raises(DegenerateNetwork):
        build_complex(net)


def test_narrow_first_layer_unsupported():
    with pytest.raises(ArchitectureUnsupported):
        build_complex(random_init((3, 2, 1), 0))
    with pytest.raises(ArchitectureUnsupported):
        first_layer_vertices(random_init((3, 2, 1), 0))


def test_extend_layer_contract_errors(hand_net):
    state = first_layer_vertices(hand_net)
    with pytest.raises(ValueError):
        extend_layer(hand_net, 3, state)
    with pytest.raises(ValueError):
        extend_layer(hand_net, 2, state, region_order=sorted(state.regions)[:-1])


def test_merge_vertex_duplicate_handling():
    tol = Tolerances()
    signs = S([0, 0, 1])
    a = Vertex(np.array([0.0, 0.0]), signs, (0, 1), 1e-12, 5.0)
    b = Vertex(np.array([1.0, 1.0]), signs, (0, 1), 1e-12, 5.0)
    table = {signs: a}
    with pytest.raises(DuplicateMismatch):
        _merge_vertex(table, b, tol)
    # coincident duplicates keep the better-conditioned discovery, either order
    c = Vertex(np.array([1e-9, 0.0]), signs, (0, 1), 1e-13, 2.0)
    t1 = {}
    _merge_vertex(t1, a, tol)
    _merge_vertex(t1, c, tol)
    t2 = {}
    _merge_vertex(t2, c, tol)
    _merge_vertex(t2, a, tol)
    assert t1[signs] is c and t2[signs] is c
