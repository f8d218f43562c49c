from __future__ import annotations

import unittest

import networkx as nx
import numpy as np

from topoexplore_core.grid_map import CellState, InvalidArgumentError, OccupancyGrid, diff
from topoexplore_core.ltg import (
    LowNode,
    build_full,
    check_edge,
    cluster_frontiers,
    corridor_offsets,
    detect_frontiers,
    export_graph,
    score_frontier,
    score_frontiers,
    update,
)

from .helpers import brute_corridor_free, graph_signature, grid_from_rows, open_grid, random_grid


def _node(cell, grid):
    return LowNode(id=grid.index(cell), cell=cell, position=grid.cell_to_world(cell))


class BuildFullTests(unittest.TestCase):
    def test_unknown_grid_gives_empty_graph(self):
        graph = build_full(OccupancyGrid.unknown(40, 40))
        self.assertEqual(len(graph.nodes), 0)
        self.assertEqual(graph.edges, set())

    def test_open_grid_lattice(self):
        graph = build_full(open_grid(30, 30), k=6, corridor_width_w=3)
        self.assertEqual(graph.phase, (0, 0))
        self.assertEqual(len(graph.nodes), 25)
        interior = [n for n in graph.nodes.values() if 0 < n.cell[0] < 24 and 0 < n.cell[1] < 24]
        self.assertEqual(len(interior), 9)
        self.assertTrue(all(n.degree == 8 for n in interior))
        for node in graph.nodes.values():
            self.assertEqual(node.degree, len(graph.adjacency[node.id]))
            self.assertEqual(node.id, node.cell[1] * 30 + node.cell[0])

    def test_wall_splits_graph(self):
        cells = np.full((30, 31), CellState.FREE, dtype=np.int8)
        cells[:, 15] = CellState.OCCUPIED
        grid = OccupancyGrid(width=31, height=30, cells=cells)
        graph = build_full(grid, k=6, corridor_width_w=3)
        components = list(nx.connected_components(graph.to_networkx()))
        self.assertEqual(len(components), 2)
        for comp in components:
            xs = {graph.nodes[n].cell[0] for n in comp}
            self.assertTrue(max(xs) < 15 or min(xs) > 15)

    def test_invalid_parameters(self):
        with self.assertRaises(InvalidArgumentError):
            build_full(open_grid(10, 10), k=1)
        with self.assertRaises(InvalidArgumentError):
            build_full(open_grid(10, 10), corridor_width_w=0)

    def test_every_edge_corridor_is_free(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            grid = random_grid(rng, 48, 48)
            graph = build_full(grid, k=6, corridor_width_w=7)
            for u, v in graph.edges:
                self.assertTrue(brute_corridor_free(grid, graph.nodes[u].cell, graph.nodes[v].cell, 7))


class CheckEdgeTests(unittest.TestCase):
    def test_open_space(self):
        grid = open_grid(20, 20)
        self.assertTrue(check_edge(grid, _node((5, 5), grid), _node((11, 5), grid), 3))

    def test_blocked_direct_line(self):
        grid = open_grid(20, 20).with_updates(np.array([5 * 20 + 8]), np.array([CellState.OCCUPIED]))
        self.assertFalse(check_edge(grid, _node((5, 5), grid), _node((11, 5), grid), 3))

    def test_blocked_at_perpendicular_offset(self):
        grid = open_grid(20, 20).with_updates(np.array([6 * 20 + 8]), np.array([CellState.OCCUPIED]))
        self.assertFalse(check_edge(grid, _node((5, 5), grid), _node((11, 5), grid), 3))
        # fora da faixa de 3 células
        grid = open_grid(20, 20).with_updates(np.array([7 * 20 + 8]), np.array([CellState.OCCUPIED]))
        self.assertTrue(check_edge(grid, _node((5, 5), grid), _node((11, 5), grid), 3))

    def test_axis_aligned_corridor_is_w_wide(self):
        offsets = corridor_offsets((1, 0), 6, 7)
        self.assertEqual(set(offsets[:, 1].tolist()), set(range(-3, 4)))
        self.assertEqual(set(offsets[:, 0].tolist()), set(range(0, 7)))
        self.assertEqual(len(offsets), 7 * 7)

    def test_not_lattice_adjacent(self):
        grid = open_grid(20, 20)
        with self.assertRaises(InvalidArgumentError):
            check_edge(grid, _node((0, 0), grid), _node((6, 3), grid), 3)

    def test_matches_brute_force_on_random_maps(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            grid = random_grid(rng, 40, 40)
            for _ in range(30):
                x, y = (int(v) for v in rng.integers(6, 28, size=2))
                d = [(1, 0), (0, 1), (1, 1), (-1, 1)][int(rng.integers(0, 4))]
                other = (x + 6 * d[0], y + 6 * d[1])
                self.assertEqual(
                    check_edge(grid, _node((x, y), grid), _node(other, grid), 5),
                    brute_corridor_free(grid, (x, y), other, 5),
                )


class UpdateTests(unittest.TestCase):
    def test_empty_diff_keeps_graph(self):
        grid = open_grid(30, 30)
        graph = build_full(grid)
        same = update(graph, grid, diff(grid, grid))
        self.assertEqual(graph_signature(same), graph_signature(graph))

    def test_single_lattice_cell_becomes_free(self):
        cells = np.full((30, 30), CellState.FREE, dtype=np.int8)
        cells[12, 12] = CellState.UNKNOWN
        before = OccupancyGrid(width=30, height=30, cells=cells)
        after = before.with_updates(np.array([12 * 30 + 12]), np.array([CellState.FREE]))
        graph = build_full(before, k=6, corridor_width_w=3)

        updated = update(graph, after, diff(after, before))
        self.assertEqual(len(updated.nodes), len(graph.nodes) + 1)
        added = len(updated.edges) - len(graph.edges)
        self.assertGreater(added, 0)
        self.assertLessEqual(added, 8 + 8)
        self.assertEqual(graph_signature(updated), graph_signature(build_full(after, k=6, corridor_width_w=3)))

    def test_update_returns_new_snapshot(self):
        before = OccupancyGrid.unknown(30, 30)
        after = open_grid(30, 30)
        graph = build_full(before)
        update(graph, after, diff(after, before))
        self.assertEqual(len(graph.nodes), 0)

    def test_frame_mismatch(self):
        graph = build_full(open_grid(30, 30))
        with self.assertRaises(InvalidArgumentError):
            update(graph, open_grid(31, 30), diff(open_grid(31, 30), open_grid(31, 30)))

    def test_incremental_equals_batch(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            grid = OccupancyGrid.unknown(50, 44, origin=(-0.4, 0.15))
            graph = build_full(grid)
            for _ in range(10):
                new = random_grid(rng, 50, 44)
                # mistura a grelha actual com uma aleatória numa janela
                x0, y0 = (int(v) for v in rng.integers(0, 40, size=2))
                cells = grid.cells.copy()
                cells[y0:y0 + 15, x0:x0 + 15] = new.cells[y0:y0 + 15, x0:x0 + 15]
                nxt = OccupancyGrid(width=50, height=44, origin=grid.origin, cells=cells, version=grid.version + 1)
                graph = update(graph, nxt, diff(nxt, grid))
                grid = nxt
                batch = build_full(grid)
                self.assertEqual(graph_signature(graph), graph_signature(batch))
                for nid, node in graph.nodes.items():
                    self.assertEqual(node.degree, batch.nodes[nid].degree)


class FrontierTests(unittest.TestCase):
    def test_free_surroundings_score_zero(self):
        grid = open_grid(20, 20)
        self.assertEqual(score_frontier(grid, _node((10, 10), grid), 3), (0, False))

    def test_occupied_neighbour_stops_at_first_window(self):
        grid = grid_from_rows([
            ".....",
            ".???.",
            "...#.",
            ".....",
            ".....",
        ])
        info, occupied = score_frontier(grid, _node((2, 2), grid), 3)
        self.assertTrue(occupied)
        self.assertEqual(info, 3)

    def test_half_unknown_map(self):
        rows = ["?" * 20] * 10 + ["." * 20] * 10
        grid = grid_from_rows(rows)
        node = _node((10, 9), grid)
        info, _ = score_frontier(grid, node, 3)
        window = grid.unknown_mask[6:13, 7:14]
        self.assertEqual(info, int(np.count_nonzero(window)))

    def test_out_of_bounds_counts_as_unknown(self):
        grid = open_grid(10, 10)
        info, _ = score_frontier(grid, _node((0, 5), grid), 1)
        self.assertEqual(info, 3)

    def test_batched_scores_match_single_node(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            grid = random_grid(rng, 40, 30)
            cells = np.array([(x, y) for y in range(grid.height) for x in range(grid.width)], dtype=np.int64)
            for d_max in (1, 3, 5):
                info, occupied = score_frontiers(grid, cells, d_max)
                for (x, y), i, o in zip(cells.tolist(), info.tolist(), occupied.tolist()):
                    self.assertEqual((i, o), score_frontier(grid, _node((x, y), grid), d_max))

    def test_batched_scores_empty_input(self):
        info, occupied = score_frontiers(open_grid(5, 5), np.zeros((0, 2), dtype=np.int64), 3)
        self.assertEqual((info.size, occupied.size), (0, 0))
        with self.assertRaises(InvalidArgumentError):
            score_frontiers(open_grid(5, 5), np.zeros((0, 2), dtype=np.int64), 0)

    def test_explored_closed_room_has_no_frontier(self):
        rows = ["#" * 32] + ["#" + "." * 30 + "#" for _ in range(30)] + ["#" * 32]
        grid = grid_from_rows(rows)
        graph = build_full(grid, k=6, corridor_width_w=3)
        self.assertEqual(detect_frontiers(graph, grid, 5, 4), [])

    def test_straight_frontier_is_one_cluster(self):
        rows = ["?" * 61] * 12 + ["#" + "." * 59 + "#"] * 27 + ["#" * 61]
        grid = grid_from_rows(rows)
        graph = build_full(grid, k=6, corridor_width_w=3)
        clusters = detect_frontiers(graph, grid, 5, 4)
        self.assertEqual(len(clusters), 1)
        boundary_y = 27.5
        for m in clusters[0].members:
            self.assertLessEqual(abs(graph.nodes[m].cell[1] - boundary_y), 5 + 0.5)
        self.assertIn(clusters[0].center_node, clusters[0].members)

    def test_two_separate_unknown_regions(self):
        rows = ["?" * 61] * 12 + ["#" + "." * 59 + "#"] * 40 + ["?" * 61] * 12
        grid = grid_from_rows(rows)
        graph = build_full(grid, k=6, corridor_width_w=3)
        clusters = detect_frontiers(graph, grid, 5, 4)
        self.assertEqual(len(clusters), 2)

    def test_screening_matches_full_scan(self):
        rng = np.random.default_rng(23)
        for _ in range(15):
            grid = random_grid(rng, 60, 60, p_free=0.6, p_occ=0.2)
            graph = build_full(grid)
            screened = detect_frontiers(graph, grid)
            screened_set = {m for c in screened for m in c.members}
            full = detect_frontiers(graph, grid, screen=False)
            full_set = {m for c in full for m in c.members}
            self.assertEqual(screened_set, full_set)

    def test_clusters_partition_frontier_nodes(self):
        rng = np.random.default_rng(29)
        grid = random_grid(rng, 60, 60, p_free=0.5, p_occ=0.1)
        graph = build_full(grid)
        clusters = detect_frontiers(graph, grid)
        members = [m for c in clusters for m in c.members]
        self.assertEqual(len(members), len(set(members)))
        self.assertEqual(set(members), {n for n, node in graph.nodes.items() if node.is_frontier})
        for c in clusters:
            sub = graph.to_networkx().subgraph(c.members)
            self.assertTrue(nx.is_connected(sub))

    def test_cluster_center_is_closest_to_centroid(self):
        grid = open_grid(30, 30)
        graph = build_full(grid, k=6, corridor_width_w=3)
        row = sorted(n for n, node in graph.nodes.items() if node.cell[1] == 6)
        cluster = cluster_frontiers(graph, row)[0]
        self.assertEqual(graph.nodes[cluster.center_node].cell, (12, 6))


class ExportTests(unittest.TestCase):
    def test_export_lists_nodes_and_edges(self):
        graph = build_full(open_grid(12, 6), k=6, corridor_width_w=1)
        text = export_graph(graph)
        self.assertEqual(text.splitlines()[0], "N 0 0 0 1 0")
        self.assertIn("E 0 6", text)


if __name__ == "__main__":
    unittest.main()
