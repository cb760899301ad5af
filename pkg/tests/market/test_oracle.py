import json
from unittest import TestCase

import numpy as np

from ppm_game.exceptions import InvalidGrid, GridTooLarge, NoInteriorCandidate
from ppm_game.market.constant import FINE_RESOLUTION, COARSE_RESOLUTION
from ppm_game.market.game import StrategyProfile, validate_game
from ppm_game.market.interior import solve_interior
from ppm_game.market.oracle import GridSpec, default_resolution, simplex_grid, grid_search_equilibria
from ppm_game.market.payoff import all_payoffs
from ppm_game.market.verifier import profile_regret
from tests.builders import single_segment_game, random_game


class GridSpecTest(TestCase):
    def test_invalid_resolution(self):
        for h in (0.3, 0, -0.5, 1.5):
            with self.assertRaises(InvalidGrid):
                GridSpec(h)

    def test_sizes(self):
        grid = GridSpec(0.25)

        self.assertEqual(grid.steps, 4)
        self.assertEqual(grid.size(1), 1)
        self.assertEqual(grid.size(2), 5)
        self.assertEqual(grid.size(3), 15)
        self.assertEqual(GridSpec(0.1).steps, 10)

    def test_simplex_grid_order(self):
        np.testing.assert_allclose(simplex_grid(3, 0.5), [
            [0, 0, 1], [0, 0.5, 0.5], [0, 1, 0], [0.5, 0, 0.5], [0.5, 0.5, 0], [1, 0, 0],
        ])
        np.testing.assert_array_equal(simplex_grid(1, 0.1), [[1.0]])

    def test_simplex_grid_points(self):
        points = simplex_grid(4, 0.2)

        self.assertEqual(len(points), GridSpec(0.2).size(4))
        np.testing.assert_allclose(points.sum(axis=1), 1.0)
        self.assertEqual(len({tuple(row) for row in np.round(points, 9)}), len(points))

    def test_default_resolution(self):
        pair = single_segment_game({'north': [('A', 1, 1), ('B', 1, 2)], 'south': [('C', 1, 1), ('D', 1, 2)]})
        mixed = single_segment_game({'north': [('A', 1, 1), ('B', 1, 2)], 'south': [('C', 1, 1)]})

        self.assertEqual(default_resolution(pair), FINE_RESOLUTION)
        self.assertEqual(default_resolution(mixed), COARSE_RESOLUTION)


class GridSearchTest(TestCase):
    def setUp(self):
        self.duopoly = single_segment_game({
            'north': [('A', 1, 1), ('B', 1, 2)],
            'south': [('C', 1, 1), ('D', 1, 2)],
        })

    def test_singleton_catalogs(self):
        game = single_segment_game({'north': [('A', 10, 1)], 'south': [('B', 8, 2)]})
        hits = grid_search_equilibria(game, GridSpec(0.1), eps=0.0)

        self.assertEqual(len(hits), 1)
        self.assertEqual(hits[0].max_regret, 0.0)
        self.assertEqual(hits[0].to_mapping(game), {
            'profile': {'north': {'A': 1.0}, 'south': {'B': 1.0}},
            'grid_regret': {'north': 0.0, 'south': 0.0},
        })

    def test_vertex_best_response(self):
        game = single_segment_game({'north': [('A', 2, 1), ('B', 1, 1)], 'south': [('C', 1, 1)]})
        hits = grid_search_equilibria(game, GridSpec(0.5), eps=1e-9 * game.payoff_scale)

        self.assertEqual(len(hits), 1)
        self.assertEqual(hits[0].profile.to_mapping(game), {'north': {'A': 1.0, 'B': 0.0}, 'south': {'C': 1.0}})

    def test_grid_too_large(self):
        game = single_segment_game({
            f'firm{i}': [(f'P{i}{k}', 1 + k, 1) for k in range(3)] for i in range(3)
        })
        with self.assertRaises(GridTooLarge):
            grid_search_equilibria(game, GridSpec(FINE_RESOLUTION), eps=1.0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(41)
        h = 0.1
        points = simplex_grid(2, h)
        for _ in range(5):
            game = random_game(rng, n=2, rho=2, min_rho=2)
            eps = 1e-3 * game.payoff_scale
            payoffs = np.zeros((len(points), len(points), 2))
            for a, x in enumerate(points):
                for b, y in enumerate(points):
                    sigma = np.zeros((2, game.n_products))
                    sigma[0, game.catalogs[0]] = x
                    sigma[1, game.catalogs[1]] = y
                    payoffs[a, b] = all_payoffs(game, StrategyProfile(sigma))
            regret0 = payoffs[:, :, 0].max(axis=0, keepdims=True) - payoffs[:, :, 0]
            regret1 = payoffs[:, :, 1].max(axis=1, keepdims=True) - payoffs[:, :, 1]
            expected = np.argwhere(np.maximum(regret0, regret1) <= eps)

            hits = grid_search_equilibria(game, GridSpec(h), eps=eps)
            self.assertEqual(len(hits), len(expected))
            for hit, (a, b) in zip(hits, expected):
                np.testing.assert_allclose(hit.profile.sigma[0, game.catalogs[0]], points[a])
                np.testing.assert_allclose(hit.profile.sigma[1, game.catalogs[1]], points[b])
                np.testing.assert_allclose(hit.regrets, [regret0[a, b], regret1[a, b]], atol=1e-9 * game.payoff_scale)

    def test_refinement_keeps_every_hit(self):
        rng = np.random.default_rng(47)
        coarse, fine = GridSpec(0.1), GridSpec(0.05)
        checked = 0
        for _ in range(10):
            game = random_game(rng, n=2, rho=2, min_rho=2)
            eps = 1e-3 * game.payoff_scale
            fine_hits = grid_search_equilibria(game, fine, eps=eps)
            for hit in grid_search_equilibria(game, coarse, eps=eps):
                distances = [np.max(np.abs(other.profile.sigma - hit.profile.sigma)) for other in fine_hits]
                self.assertLessEqual(min(distances, default=np.inf), coarse.resolution + 1e-12)
                checked += 1
        self.assertGreater(checked, 0)

    def test_workers_do_not_change_hits(self):
        game = random_game(np.random.default_rng(43), n=3, rho=2, min_rho=2)
        eps = 1e-2 * game.payoff_scale
        serial = grid_search_equilibria(game, GridSpec(0.1), eps=eps)
        threaded = grid_search_equilibria(game, GridSpec(0.1), eps=eps, workers=3)

        self.assertEqual(len(serial), len(threaded))
        for first, second in zip(serial, threaded):
            np.testing.assert_array_equal(first.profile.sigma, second.profile.sigma)

    def test_firm_order_invariance(self):
        data = self.duopoly.to_mapping()
        data['firms'].reverse()
        reordered = validate_game(data)
        eps = 1e-4 * self.duopoly.payoff_scale

        first = grid_search_equilibria(self.duopoly, GridSpec(0.05), eps=eps)
        second = grid_search_equilibria(reordered, GridSpec(0.05), eps=eps)
        self.assertEqual(sorted(json.dumps(hit.profile.to_mapping(self.duopoly), sort_keys=True) for hit in first),
                         sorted(json.dumps(hit.profile.to_mapping(reordered), sort_keys=True) for hit in second))

    def test_equilibria_sit_on_vertices(self):
        hits = grid_search_equilibria(self.duopoly, GridSpec(0.05), eps=1e-6 * self.duopoly.payoff_scale)
        mappings = [hit.profile.to_mapping(self.duopoly) for hit in hits]

        self.assertIn({'north': {'A': 0.0, 'B': 1.0}, 'south': {'C': 0.0, 'D': 1.0}}, mappings)
        for hit in hits:
            for i, catalog in enumerate(self.duopoly.catalogs):
                self.assertEqual(hit.profile.sigma[i, catalog].max(), 1.0)


class EquilibriumPipelineTest(TestCase):
    def test_solver_and_oracle_agree(self):
        rng = np.random.default_rng(53)
        grid = GridSpec(FINE_RESOLUTION)
        margin = 2 * grid.resolution
        for _ in range(20):
            game = random_game(rng, n=2, rho=2, min_rho=2)
            scale = game.payoff_scale
            hits = grid_search_equilibria(game, grid, eps=1e-6 * scale)
            try:
                candidates = solve_interior(game, starts=4)
            except NoInteriorCandidate as e:
                candidates = e.candidates

            for candidate in candidates:
                report, certified = profile_regret(game, candidate.profile)
                if certified:
                    self.assertLessEqual(report.epsilon, 1e-6 * scale)
                    distances = [np.max(np.abs(hit.profile.sigma - candidate.profile.sigma)) for hit in hits]
                    self.assertLessEqual(min(distances), grid.resolution)
            for hit in hits:
                interior = all(np.all(hit.profile.sigma[i, catalog] >= margin)
                               for i, catalog in enumerate(game.catalogs))
                self.assertFalse(interior)
