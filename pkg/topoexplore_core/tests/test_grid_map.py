from __future__ import annotations

import tempfile
import unittest
from pathlib import Path

import numpy as np

from topoexplore_core.grid_map import (
    CellState,
    GridDiff,
    InvalidArgumentError,
    MapFileError,
    OccupancyGrid,
    apply_diff,
    bresenham_line,
    coverage,
    diff,
    line_of_sight_free,
    lines_of_sight_free,
    load_map,
    masked_coverage,
    observable_cell_count,
    observable_mask,
    parse_map,
)

from .helpers import cells_from_rows, grid_from_rows, open_grid, random_grid, textbook_bresenham


class OccupancyGridTests(unittest.TestCase):
    def test_unknown_grid_has_requested_shape(self):
        grid = OccupancyGrid.unknown(7, 3)
        self.assertEqual(grid.shape, (3, 7))
        self.assertTrue(grid.unknown_mask.all())
        self.assertEqual(grid.version, 0)

    def test_invalid_dimensions_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            OccupancyGrid(width=0, height=3)
        with self.assertRaises(InvalidArgumentError):
            OccupancyGrid(width=3, height=3, resolution=0.0)
        with self.assertRaises(InvalidArgumentError):
            OccupancyGrid(width=3, height=3, cells=np.zeros(8, dtype=np.int8))

    def test_cells_are_read_only(self):
        grid = open_grid(4, 4)
        with self.assertRaises(ValueError):
            grid.cells[0, 0] = CellState.OCCUPIED

    def test_with_updates_bumps_version(self):
        grid = OccupancyGrid.unknown(4, 4)
        new = grid.with_updates(np.array([5]), np.array([CellState.FREE]))
        self.assertEqual(new.version, 1)
        self.assertEqual(new.state((1, 1)), CellState.FREE)
        self.assertEqual(grid.state((1, 1)), CellState.UNKNOWN)

    def test_world_cell_mapping_uses_floor(self):
        grid = OccupancyGrid(width=10, height=10, resolution=0.5, origin=(-1.0, -1.0))
        self.assertEqual(grid.world_to_cell((-1.0, -1.0)), (0, 0))
        self.assertEqual(grid.world_to_cell((-0.51, 0.49)), (0, 2))
        self.assertEqual(grid.world_to_cell((-1.01, 0.0)), (-1, 2))
        self.assertEqual(grid.cell_to_world((0, 0)), (-0.75, -0.75))

    def test_grid_from_text_rows(self):
        grid = grid_from_rows(["#?", ".."])
        self.assertEqual(grid.state((0, 1)), CellState.OCCUPIED)
        self.assertEqual(grid.state((1, 1)), CellState.UNKNOWN)
        self.assertEqual(grid.state((0, 0)), CellState.FREE)

    def test_text_rows_reject_bad_input(self):
        with self.assertRaisesRegex(ValueError, "carácter inválido 'x'"):
            cells_from_rows(["..", ".x"])
        with self.assertRaisesRegex(ValueError, "Fila 1"):
            cells_from_rows(["...", ".."])


class CoverageTests(unittest.TestCase):
    def test_nothing_known(self):
        grid = OccupancyGrid.unknown(10, 10)
        self.assertEqual(coverage(grid, 100), 0.0)

    def test_everything_known(self):
        self.assertEqual(coverage(open_grid(10, 10), 100), 1.0)

    def test_half_known(self):
        grid = OccupancyGrid.unknown(10, 10).with_updates(np.arange(50), np.full(50, CellState.FREE))
        self.assertEqual(coverage(grid, 100), 0.5)

    def test_bad_denominator(self):
        with self.assertRaises(InvalidArgumentError):
            coverage(open_grid(2, 2), 0)
        with self.assertRaises(InvalidArgumentError):
            coverage(open_grid(2, 2), 3)

    def test_masked_coverage_ignores_cells_outside_mask(self):
        grid = grid_from_rows(["..??", "..??"])
        mask = np.zeros((2, 4), dtype=bool)
        mask[:, 1:3] = True
        self.assertEqual(masked_coverage(grid, mask), 0.5)


class BresenhamTests(unittest.TestCase):
    def test_degenerate(self):
        self.assertEqual(bresenham_line((0, 0), (0, 0)), [(0, 0)])

    def test_diagonal(self):
        self.assertEqual(bresenham_line((0, 0), (3, 3)), [(0, 0), (1, 1), (2, 2), (3, 3)])

    def test_shallow_line_matches_textbook(self):
        line = bresenham_line((0, 0), (3, 1))
        self.assertEqual(line, [(0, 0), (1, 0), (2, 1), (3, 1)])
        self.assertEqual(line, textbook_bresenham((0, 0), (3, 1)))

    def test_out_of_bounds_endpoint(self):
        grid = open_grid(5, 5)
        with self.assertRaises(InvalidArgumentError):
            bresenham_line((0, 0), (5, 0), grid)
        with self.assertRaises(InvalidArgumentError):
            line_of_sight_free(grid, (-1, 0), (2, 2))

    def test_random_lines_properties(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            a = tuple(int(v) for v in rng.integers(-20, 20, size=2))
            b = tuple(int(v) for v in rng.integers(-20, 20, size=2))
            line = bresenham_line(a, b)

            self.assertEqual(line[0], a)
            self.assertEqual(line[-1], b)
            self.assertEqual(len(line), max(abs(b[0] - a[0]), abs(b[1] - a[1])) + 1)
            for (x0, y0), (x1, y1) in zip(line, line[1:]):
                self.assertLessEqual(max(abs(x1 - x0), abs(y1 - y0)), 1)

            # cada célula fica a no máximo meia célula da recta ideal no eixo menor
            dx, dy = b[0] - a[0], b[1] - a[1]
            for x, y in line:
                if abs(dx) >= abs(dy) and dx != 0:
                    ideal = a[1] + dy * (x - a[0]) / dx
                    self.assertLessEqual(abs(y - ideal), 0.5 + 1e-9)
                elif dy != 0:
                    ideal = a[0] + dx * (y - a[1]) / dy
                    self.assertLessEqual(abs(x - ideal), 0.5 + 1e-9)

            self.assertEqual(bresenham_line(b, a), list(reversed(line)))


class LineOfSightTests(unittest.TestCase):
    def test_same_free_cell(self):
        self.assertTrue(line_of_sight_free(open_grid(3, 3), (1, 1), (1, 1)))

    def test_free_corridor(self):
        grid = grid_from_rows(["##########", "..........", "##########"])
        self.assertTrue(line_of_sight_free(grid, (0, 1), (9, 1)))

    def test_single_blocker(self):
        grid = grid_from_rows(["##########", "....#.....", "##########"])
        self.assertFalse(line_of_sight_free(grid, (0, 1), (9, 1)))

    def test_unknown_blocks_sight(self):
        grid = grid_from_rows(["....?....."])
        self.assertFalse(line_of_sight_free(grid, (0, 0), (9, 0)))


    def test_batched_matches_single_pairs(self):
        rng = np.random.default_rng(17)
        grid = random_grid(rng, 50, 40)
        starts = np.stack([rng.integers(0, 50, 5000), rng.integers(0, 40, 5000)], axis=1)
        ends = np.stack([rng.integers(0, 50, 5000), rng.integers(0, 40, 5000)], axis=1)
        ends[:10] = starts[:10]
        batched = lines_of_sight_free(grid, starts, ends)
        expected = [line_of_sight_free(grid, tuple(a), tuple(b)) for a, b in zip(starts.tolist(), ends.tolist())]
        self.assertEqual(batched.tolist(), expected)

    def test_batched_rejects_out_of_bounds(self):
        grid = open_grid(5, 5)
        self.assertEqual(lines_of_sight_free(grid, np.zeros((0, 2)), np.zeros((0, 2))).size, 0)
        with self.assertRaises(InvalidArgumentError):
            lines_of_sight_free(grid, [(0, 0)], [(5, 0)])


class DiffTests(unittest.TestCase):
    def test_identical_grids(self):
        grid = open_grid(5, 5)
        self.assertFalse(diff(grid, grid))
        self.assertEqual(len(diff(grid, grid)), 0)

    def test_single_flip(self):
        previous = OccupancyGrid.unknown(4, 4)
        current = previous.with_updates(np.array([6]), np.array([CellState.FREE]))
        d = diff(current, previous)
        self.assertEqual(d.changed, [(6, CellState.UNKNOWN, CellState.FREE)])

    def test_shape_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            diff(open_grid(4, 4), open_grid(4, 5))

    def test_random_pairs_match_cell_by_cell(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = random_grid(rng, 20, 20)
            b = random_grid(rng, 20, 20)
            d = diff(a, b)
            expected = [
                i for i in range(400)
                if a.cells.reshape(-1)[i] != b.cells.reshape(-1)[i]
            ]
            self.assertEqual(d.indices.tolist(), expected)
            self.assertTrue(all(old != new for _, old, new in d.changed))
            self.assertTrue(np.array_equal(apply_diff(b, d).cells, a.cells))

    def test_apply_diff_checks_source(self):
        d = GridDiff(indices=np.array([0]), old=np.array([CellState.UNKNOWN], dtype=np.int8),
                     new=np.array([CellState.FREE], dtype=np.int8))
        with self.assertRaises(InvalidArgumentError):
            apply_diff(open_grid(2, 2), d)


class MapFileTests(unittest.TestCase):
    def test_first_text_row_is_top(self):
        truth = parse_map("resolution=0.1\n#..\n...\n")
        self.assertEqual(truth.grid.resolution, 0.1)
        self.assertEqual(truth.grid.state((0, 1)), CellState.OCCUPIED)
        self.assertEqual(truth.grid.state((0, 0)), CellState.FREE)

    def test_glass_blocks_and_is_transparent(self):
        truth = parse_map("..g\n...")
        self.assertTrue(truth.is_blocked((2, 1)))
        self.assertTrue(truth.transparent[1, 2])
        self.assertTrue(truth.is_blocked((5, 0)))

    def test_ragged_rows_report_line(self):
        with self.assertRaisesRegex(MapFileError, r":3:"):
            parse_map("resolution=0.05\n....\n...\n")

    def test_bad_character(self):
        with self.assertRaisesRegex(MapFileError, "inválido"):
            parse_map("..x.\n")

    def test_empty_map(self):
        with self.assertRaises(MapFileError):
            parse_map("resolution=0.05\n\n")

    def test_missing_file(self):
        with self.assertRaises(MapFileError):
            load_map(Path(tempfile.gettempdir()) / "nao_existe.map")

    def test_load_map_uses_stem_as_name(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "sala.map"
            path.write_text("###\n#.#\n###\n", encoding="utf-8")
            self.assertEqual(load_map(path).name, "sala")

    def test_observable_cells(self):
        truth = parse_map(
            "#######\n"
            "#..#..#\n"
            "#..#..#\n"
            "#######\n"
        )
        # 4 livres do lado esquerdo + 12 paredes à volta delas (a parede do meio conta)
        mask = observable_mask(truth, (1, 1))
        self.assertEqual(int(np.count_nonzero(mask & truth.grid.free_mask)), 4)
        self.assertEqual(observable_cell_count(truth, (1, 1)), 4 + 12)

    def test_observable_excludes_glass(self):
        truth = parse_map("#g#\n#.#\n###\n")
        self.assertEqual(observable_cell_count(truth, (1, 1)), 8)

    def test_observable_start_must_be_free(self):
        truth = parse_map("###\n#.#\n###\n")
        with self.assertRaises(InvalidArgumentError):
            observable_mask(truth, (0, 0))

    def _rooms_with_gap(self):
        # duas salas 19 x 19 ligadas por uma frincha de 3 células em x = 20
        rows = ["#" * 41]
        for r in range(19):
            wall = "." if 8 <= r <= 10 else "#"
            rows.append("#" + "." * 19 + wall + "." * 19 + "#")
        rows.append("#" * 41)
        return parse_map("\n".join(rows))

    def test_clearance_closes_narrow_gap(self):
        truth = self._rooms_with_gap()
        loose = observable_mask(truth, (10, 10))
        tight = observable_mask(truth, (10, 10), clearance=3)
        free = truth.grid.free_mask
        self.assertTrue((loose & free)[:, 21:40].any())
        self.assertFalse((tight & free)[:, 21:40].any())
        self.assertTrue(tight[10, 10])
        self.assertTrue((tight & free)[4:17, 4:17].all())
        self.assertLess(observable_cell_count(truth, (10, 10), 3), observable_cell_count(truth, (10, 10)))

    def test_clearance_start_next_to_wall(self):
        truth = self._rooms_with_gap()
        mask = observable_mask(truth, (1, 1), clearance=3)
        self.assertTrue(mask[1, 1])
        self.assertTrue(mask[10, 10])
        self.assertFalse((mask & truth.grid.free_mask)[:, 21:40].any())

    def test_clearance_wider_than_every_room(self):
        truth = self._rooms_with_gap()
        np.testing.assert_array_equal(
            observable_mask(truth, (10, 10), clearance=30), observable_mask(truth, (10, 10))
        )
        with self.assertRaises(InvalidArgumentError):
            observable_mask(truth, (10, 10), clearance=-1)


if __name__ == "__main__":
    unittest.main()
