"""Passability graph, all-pairs distances, and the two potential
functions, cross-checked against an independent breadth-first oracle."""
from collections import deque

import pytest

from trajsynth.distances import (
    PotentialContext,
    apsp,
    build_graph,
    delta,
    distance_table,
    load_table,
    phi,
    save_table,
)
from trajsynth.errors import UnreachableStateError
from trajsynth.gridworld import load_map, obs_id, GameState, Status


def bfs_oracle(gm, src):
    """Plain queue-based flood fill, independent of the library's solver."""
    dist = {src: 0}
    queue = deque([src])
    while queue:
        r, c = queue.popleft()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if (0 <= nr < gm.height and 0 <= nc < gm.width
                    and gm.passable[nr][nc] and (nr, nc) not in dist):
                dist[(nr, nc)] = dist[(r, c)] + 1
                queue.append((nr, nc))
    return dist


def passable_cells(gm):
    return [(r, c) for r in range(gm.height) for c in range(gm.width)
            if gm.passable[r][c]]


# --------------------------------------------------------------------- graph

def test_graph_2x2_open():
    gm = load_map("kind=maze horizon=10\nS.\n.G\n")
    graph = build_graph(gm)
    assert len(graph.nodes) == 4
    assert len(graph.edges) == 4


def test_graph_corridor():
    gm = load_map("kind=maze horizon=10\nS.G\n")
    graph = build_graph(gm)
    assert len(graph.nodes) == 3
    assert len(graph.edges) == 2


def test_graph_isolated_cell_has_degree_zero():
    # (0,3) is passable but walled off from every neighbour
    graph = build_graph(load_map("kind=maze horizon=10\nS.#.\n..##\n...G\n"))
    degree = {}
    for a, b in graph.edges:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    assert degree.get((0, 3), 0) == 0


def test_graph_edges_symmetric_unordered(maze5):
    graph = build_graph(maze5)
    as_sets = {frozenset(e) for e in graph.edges}
    assert len(as_sets) == len(graph.edges)  # no duplicated orientation


# ---------------------------------------------------------------------- apsp

def test_corridor_end_to_end_distance(corridor, corridor_dist):
    assert corridor_dist.d((0, 0), (0, 2)) == 2


def test_unreachable_pair_is_none():
    gm = load_map("kind=maze horizon=10\nS.#.\n..##\n...G\n")
    table = apsp(build_graph(gm))
    assert table.d((0, 0), (0, 3)) is None


def test_5x5_with_obstacle_matches_bfs():
    gm = load_map("kind=maze horizon=30\n"
                  "S....\n"
                  ".....\n"
                  "..#..\n"
                  ".....\n"
                  "....G\n")
    table = apsp(build_graph(gm))
    oracle = bfs_oracle(gm, (0, 0))
    for cell in passable_cells(gm):
        assert table.d((0, 0), cell) == oracle.get(cell)


@pytest.mark.parametrize("name", ["maze_5x5", "ctf_8x8", "ctfe_8x8", "maze_8x8"])
def test_apsp_matches_bfs_on_bundled_small_maps(name):
    from trajsynth.gridworld import load_bundled_map
    gm = load_bundled_map(name)
    table = distance_table(gm)
    cells = passable_cells(gm)
    for src in cells:
        oracle = bfs_oracle(gm, src)
        for dst in cells:
            assert table.d(src, dst) == oracle.get(dst), (src, dst)


def test_distance_symmetry_and_identity(maze5, maze5_dist):
    cells = passable_cells(maze5)
    for a in cells:
        assert maze5_dist.d(a, a) == 0
        for b in cells:
            assert maze5_dist.d(a, b) == maze5_dist.d(b, a)


def test_triangle_inequality_sampled(maze5, maze5_dist, rng):
    cells = passable_cells(maze5)
    for _ in range(200):
        a, b, c = (cells[int(i)] for i in rng.integers(len(cells), size=3))
        assert maze5_dist.d(a, c) <= maze5_dist.d(a, b) + maze5_dist.d(b, c)


def test_ecc_matches_row_maximum(maze5, maze5_dist):
    cells = passable_cells(maze5)
    for target in cells:
        row_max = max(maze5_dist.d(src, target) for src in cells)
        assert maze5_dist.ecc(target) == row_max


def test_table_cache_round_trip(tmp_path, maze5, maze5_dist):
    path = tmp_path / "maze5.dtbl"
    save_table(maze5_dist, path)
    assert path.read_bytes()[:5] == b"DTBL1"
    loaded = load_table(path)
    for a in passable_cells(maze5):
        for b in passable_cells(maze5):
            assert loaded.d(a, b) == maze5_dist.d(a, b)
        assert loaded.ecc(a) == maze5_dist.ecc(a)


def test_distance_table_uses_cache_dir(tmp_path, maze5):
    first = distance_table(maze5, cache_dir=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1 and maze5.map_id[:16] in files[0].name
    second = distance_table(maze5, cache_dir=tmp_path)
    assert second.d(maze5.start, maze5.goal) == first.d(maze5.start, maze5.goal)


# ---------------------------------------------------------------- potentials

def make_ctx(dist, demo_cells, goal, gamma=1.0):
    return PotentialContext(dist=dist, demo_cells=tuple(sorted(demo_cells)),
                            goal_cell=goal, gamma=gamma)


def test_delta_examples(corridor, corridor_dist):
    ctx = make_ctx(corridor_dist, [(0, 2)], corridor.goal)
    assert delta(ctx, (0, 2)) == 1.0       # the goal itself
    assert delta(ctx, (0, 0)) == 0.0       # eccentricity point
    assert delta(ctx, (0, 1)) == 0.5       # 1 - 1/2


def test_phi_examples(corridor, corridor_dist):
    ctx = make_ctx(corridor_dist, [(0, 2)], corridor.goal)
    assert phi(ctx, (0, 2)) == 1.0
    assert phi(ctx, (0, 0)) == 0.0
    assert phi(ctx, (0, 1)) == 0.5


def test_phi_equidistant_tie_breaks_to_lowest_cell_id():
    gm = load_map("kind=maze horizon=20\nS..G\n")
    dist = distance_table(gm)
    ctx = make_ctx(dist, [(0, 0), (0, 2)], gm.goal)
    # (0,1) is 1 away from both demo cells; the tie-break picks (0,0),
    # whose eccentricity is 3 -> 1 - 1/3
    assert phi(ctx, (0, 1)) == pytest.approx(1.0 - 1.0 / 3.0)


def test_phi_monotone_along_corridor_toward_demo_state():
    gm = load_map("kind=maze horizon=20\nS....G\n")
    dist = distance_table(gm)
    ctx = make_ctx(dist, [(0, 5)], gm.goal)
    values = [phi(ctx, (0, c)) for c in range(6)]
    assert values == sorted(values)


def test_potentials_bounded_on_bundled_maps():
    from trajsynth.gridworld import load_bundled_map
    for name in ("maze_5x5", "maze_10x13", "ctf_8x8", "ctfe_8x8"):
        gm = load_bundled_map(name)
        dist = distance_table(gm)
        ctx = make_ctx(dist, [gm.goal], gm.goal)
        for cell in passable_cells(gm):
            assert 0.0 <= delta(ctx, cell) <= 1.0
            assert 0.0 <= phi(ctx, cell) <= 1.0


def test_unreachable_cell_raises():
    gm = load_map("kind=maze horizon=10\nS.#.\n..##\n...G\n")
    dist = distance_table(gm)
    ctx = make_ctx(dist, [gm.goal], gm.goal)
    with pytest.raises(UnreachableStateError):
        delta(ctx, (0, 3))
