from unittest import TestCase

import numpy as np
from scipy.optimize import bisect

from ppm_game.exceptions import (
    MultiSegmentUnsupported, InteriorUnsupported, DegenerateAttractiveness, NotDegenerate, OutsideFamilyDomain,
    NoInteriorCandidate, NoValidReference,
)
from ppm_game.market.game import StrategyProfile
from ppm_game.market.interior import (
    compute_interior_constants, solve_equal_attractiveness, restricted_payoff_v, stationarity_residual,
    solve_interior, reconstruct, family_interval, k_values, affine_coefficients,
    interval_roots,
)
from ppm_game.market.payoff import firm_payoff, payoff_gradient
from ppm_game.market.verifier import profile_regret
from tests.builders import single_segment_game, random_game

X_SYMMETRIC = (28 - np.sqrt(280)) / 18


def symmetric_duopoly():
    return single_segment_game({'north': [('A', 1, 1), ('B', 1, 2)], 'south': [('C', 1, 1), ('D', 1, 2)]})


def valid_taus(constants, rng, count, margin=1e-3):
    '''Random tau vectors whose reconstruction stays inside every simplex'''
    bounds = [family_interval(constants, i, margin) for i in range(len(constants.families))]
    if any(not lo < hi for lo, hi in bounds):
        return None
    return [np.array([rng.uniform(lo, hi) for lo, hi in bounds]) for _ in range(count)]


class InteriorConstantsTest(TestCase):
    def test_two_product_example(self):
        game = single_segment_game({'acme': [('A', 1, 1), ('B', 1, 2)]})
        constants = compute_interior_constants(game, reference={0: game.product_index('A')})
        family = constants.families[0]

        np.testing.assert_allclose(family.E, [0.5, -1.0])
        np.testing.assert_allclose(family.B, [1.5, 3.0])
        np.testing.assert_allclose(family.a, [0.0, 1.0])
        np.testing.assert_allclose(family.b, [1.0, -1.0])
        self.assertAlmostEqual(family.a.sum(), 1.0)
        self.assertAlmostEqual(family.b.sum(), 0.0)

    def test_default_reference_is_largest_E(self):
        game = single_segment_game({'acme': [('A', 1, 1), ('B', 1, 2)]})
        constants = compute_interior_constants(game)

        self.assertEqual(constants.families[0].reference, game.product_index('B'))
        self.assertEqual(constants.families[0].reference_position, 1)

    def test_aggregates(self):
        game = symmetric_duopoly()
        constants = compute_interior_constants(game)
        e = game.attractiveness[:, 0, :]

        self.assertAlmostEqual(constants.a_total, float(np.sum(constants.embedded('a') * e)))
        np.testing.assert_allclose(constants.b_firm, np.sum(constants.embedded('b') * e, axis=1))

    def test_preconditions(self):
        with self.assertRaises(InteriorUnsupported) as e:
            compute_interior_constants(single_segment_game({'acme': [('A', 1, 1)]}))
        self.assertIn('at least two catalog products', str(e.exception))

        with self.assertRaises(DegenerateAttractiveness):
            compute_interior_constants(single_segment_game({'acme': [('A', 1, 3), ('B', 2, 3)]}))

        game = random_game(np.random.default_rng(0), n=2, rho=3, m=2, min_rho=2)
        with self.assertRaises(MultiSegmentUnsupported):
            compute_interior_constants(game)

    def test_pinned_family(self):
        game = single_segment_game({'acme': [('A', 2, 3), ('B', 1, 3)], 'rival': [('C', 1, 1), ('D', 2, 4)]})
        constants = compute_interior_constants(game, allow_degenerate=True)

        self.assertEqual(constants.pinned.tolist(), [True, False])
        np.testing.assert_allclose(constants.families[0].point(0.9), [1 / 3, 2 / 3])
        self.assertEqual(constants.b_firm[0], 0.0)

    def test_family_identities(self):
        rng = np.random.default_rng(17)
        checked = 0
        while checked < 200:
            game = random_game(rng, n=1, rho=5, min_rho=2)
            constants = compute_interior_constants(game)
            family = constants.families[0]
            self.assertAlmostEqual(family.a.sum(), 1.0, delta=1e-9)
            self.assertAlmostEqual(family.b.sum(), 0.0, delta=1e-9)
            self.assertTrue(np.all(family.B > 0))
            self.assertEqual(family.a[family.reference_position], 0.0)
            self.assertEqual(family.b[family.reference_position], 1.0)

            taus = rng.uniform(-1, 1, size=100)
            np.testing.assert_allclose([family.point(t).sum() for t in taus], 1.0, atol=1e-9)

            # a second admissible reference describes the same line
            order = np.argsort(-np.abs(family.E))
            other = int(order[1])
            if abs(family.E[other]) > 1e-3:
                alternative = compute_interior_constants(game, reference=[int(game.catalogs[0][other])])
                for t in taus[:10]:
                    sigma = family.point(t)
                    again = alternative.families[0].point(sigma[other])
                    np.testing.assert_allclose(again, sigma, atol=1e-8 * max(1.0, np.max(np.abs(sigma))))
            checked += 1

    def test_affine_coefficients_reference(self):
        beta, e = np.array([1.0, 1.0]), np.array([1.0, 2.0])
        E, B, a, b, pos = affine_coefficients(beta, e, 0)

        self.assertEqual(pos, 0)
        np.testing.assert_allclose(a + 0.3 * b, [0.3, 0.7])
        _, _, a, _, _ = affine_coefficients(np.array([1.0, 1.0]), np.array([2.0, 2.0]))
        self.assertIsNone(a)

    def test_nearly_equal_attractiveness(self):
        # E_t of a few 1e-12 is cancellation noise against sum 1/beta = 1.5
        _, _, a, _, _ = affine_coefficients(np.array([1.0, 2.0]), np.array([1.0, 1.0 + 2e-12]))
        self.assertIsNone(a)

        game = single_segment_game({'a': [('A', 1, 1.0), ('B', 2, 1.0 + 2e-12)], 'b': [('C', 1, 1), ('D', 3, 2)]})
        with self.assertRaises(NoValidReference) as e:
            compute_interior_constants(game)
        self.assertIn("'a'", str(e.exception))
        with self.assertRaises(NoValidReference):
            solve_interior(game)

        _, _, a, b, _ = affine_coefficients(np.array([1.0, 2.0]), np.array([1.0, 1.0 + 1e-7]))
        self.assertAlmostEqual(a.sum(), 1.0, delta=1e-6)
        self.assertAlmostEqual(b.sum(), 0.0, delta=1e-6)


class RestrictedPayoffTest(TestCase):
    def test_matches_payoff_on_family(self):
        rng = np.random.default_rng(23)
        instances = 0
        while instances < 50:
            game = random_game(rng, n=int(rng.integers(1, 4)), rho=3, min_rho=2)
            constants = compute_interior_constants(game, allow_degenerate=True)
            taus = valid_taus(constants, rng, 100)
            if taus is None:
                continue
            for tau in taus:
                profile = StrategyProfile(reconstruct(constants, tau))
                for i in range(game.n_firms):
                    expected, _ = firm_payoff(game, profile, i)
                    self.assertAlmostEqual(restricted_payoff_v(constants, game, tau, i) / expected, 1.0, delta=1e-9)
            instances += 1

    def test_demand_is_a_common_factor(self):
        small = single_segment_game({'acme': [('A', 3, 1), ('B', 2, 2)], 'rival': [('C', 1, 1), ('D', 5, 0.5)]})
        large = single_segment_game({'acme': [('A', 3, 1), ('B', 2, 2)], 'rival': [('C', 1, 1), ('D', 5, 0.5)]},
                                    demand=300.0)
        tau = [0.4, 0.6]
        ratio = (restricted_payoff_v(compute_interior_constants(large), large, tau, 0)
                 / restricted_payoff_v(compute_interior_constants(small), small, tau, 0))

        self.assertAlmostEqual(ratio, 3.0, places=12)

    def test_outside_domain(self):
        game = symmetric_duopoly()
        constants = compute_interior_constants(game)

        with self.assertRaises(OutsideFamilyDomain):
            restricted_payoff_v(constants, game, [1.2, 0.5], 0)
        with self.assertRaises(OutsideFamilyDomain):
            stationarity_residual(constants, game, [0.5, 0.0])


class StationarityResidualTest(TestCase):
    def test_quadratic_in_own_coordinate(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            game = random_game(rng, n=2, rho=2, min_rho=2)
            constants = compute_interior_constants(game)
            points = np.linspace(0.1, 0.9, 4)
            values = [stationarity_residual(constants, game, [t, 0.5])[0] for t in points]
            fit = np.polyfit(points[:3], values[:3], 2)

            self.assertAlmostEqual(np.polyval(fit, points[3]), values[3], delta=1e-10 * max(1.0, np.max(np.abs(values))))

    def test_pinned_firm_has_zero_residual(self):
        game = single_segment_game({'acme': [('A', 1, 1), ('B', 1, 1)]})
        constants = compute_interior_constants(game, allow_degenerate=True)

        np.testing.assert_array_equal(stationarity_residual(constants, game, [0.5]), [0.0])
        np.testing.assert_allclose(reconstruct(constants, [0.5]), [[0.5, 0.5]])

    def test_lone_firm_root_has_equal_partials(self):
        game = single_segment_game({'acme': [('A', 1, 1), ('B', 1, 2)]})
        constants = compute_interior_constants(game)
        root = bisect(lambda t: stationarity_residual(constants, game, [t])[0], 1e-6, 1 - 1e-6, xtol=1e-14)
        profile = StrategyProfile(reconstruct(constants, [root]))
        gradient = payoff_gradient(game, profile, 0)

        self.assertAlmostEqual(gradient[0], gradient[1], delta=1e-8 * np.max(np.abs(gradient)))


class EqualAttractivenessTest(TestCase):
    def test_examples(self):
        game = single_segment_game({'acme': [('A', 2, 5), ('B', 1, 5)]})
        np.testing.assert_allclose(solve_equal_attractiveness(game, 0).a, [1 / 3, 2 / 3])

        game = single_segment_game({'acme': [('A', 7, 2), ('B', 7, 2)]})
        np.testing.assert_allclose(solve_equal_attractiveness(game, 0).a, [0.5, 0.5])

    def test_equal_partials(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            prices = rng.uniform(1, 20, size=int(rng.integers(2, 6)))
            game = single_segment_game({
                'acme': [(f'P{k}', float(beta), 2.5) for k, beta in enumerate(prices)],
                'rival': [('Z', 3.0, 1.5)],
            })
            family = solve_equal_attractiveness(game, 0)
            sigma = np.zeros((2, game.n_products))
            sigma[0, family.catalog] = family.a
            sigma[1, game.product_index('Z')] = 1.0
            gradient = payoff_gradient(game, StrategyProfile(sigma), 0)

            np.testing.assert_allclose(gradient, gradient[0], rtol=1e-9)

    def test_lone_firm_point_is_a_minimizer(self):
        game = single_segment_game({'acme': [('A', 2, 1), ('B', 1, 1)]})
        family = solve_equal_attractiveness(game, 0)
        report, certified = profile_regret(game, StrategyProfile([family.a]))
        value, _ = firm_payoff(game, StrategyProfile([family.a]), 0)

        self.assertFalse(certified)
        for vertex in ([1.0, 0.0], [0.0, 1.0]):
            self.assertGreater(firm_payoff(game, StrategyProfile([vertex]), 0)[0], value)
        self.assertGreater(report.epsilon, 0)

    def test_not_degenerate(self):
        with self.assertRaises(NotDegenerate):
            solve_equal_attractiveness(single_segment_game({'acme': [('A', 1, 1), ('B', 1, 2)]}), 0)


class IntervalRootsTest(TestCase):
    def test_two_roots_ascending(self):
        # (x - 0.2)(x - 0.5)
        np.testing.assert_allclose(interval_roots(1.0, -0.7, 0.1, 0.0, 1.0), [0.2, 0.5])
        np.testing.assert_allclose(interval_roots(-4.0, 2.8, -0.4, 0.0, 1.0), [0.2, 0.5])
        np.testing.assert_allclose(interval_roots(1.0, -0.7, 0.1, 0.3, 1.0), [0.5])
        self.assertEqual(interval_roots(1.0, -0.7, 0.1, 0.5, 1.0), [])

    def test_no_real_roots(self):
        self.assertEqual(interval_roots(1.0, -0.6, 0.1, 0.0, 1.0), [])
        self.assertEqual(interval_roots(0.0, 0.0, 1.0, 0.0, 1.0), [])

    def test_linear(self):
        self.assertEqual(interval_roots(0.0, 2.0, -1.0, 0.0, 1.0), [0.5])

    def test_double_root_survives_rounding(self):
        # (x - 0.3)^2 with the constant nudged so the discriminant turns slightly negative
        for scale in (1.0, 1e-9, 1e6):
            q2, q1, q0 = scale, -0.6 * scale, 0.09 * (1 + 1e-14) * scale
            self.assertLess(q1 * q1 - 4 * q2 * q0, 0.0)
            roots = interval_roots(q2, q1, q0, 0.0, 1.0)
            self.assertEqual(len(roots), 1)
            self.assertAlmostEqual(roots[0], 0.3, places=12)

    def test_exact_double_root(self):
        roots = interval_roots(1.0, -1.0, 0.25, 0.0, 1.0)
        self.assertEqual(roots, [0.5])


class SolveInteriorTest(TestCase):
    def test_symmetric_duopoly(self):
        game = symmetric_duopoly()
        candidates = solve_interior(game, seed=3)
        interior = [c for c in candidates if c.interior]

        self.assertEqual(len(interior), 1)
        candidate = interior[0]
        self.assertAlmostEqual(candidate.tau[0], candidate.tau[1], places=9)
        self.assertLessEqual(np.max(candidate.residual), 1e-10 * game.payoff_scale * 2)

        # one-dimensional oracle on the symmetric diagonal
        constants = compute_interior_constants(game)
        diagonal = bisect(lambda t: stationarity_residual(constants, game, [t, t])[0], 1e-3, 1 - 1e-3, xtol=1e-14)
        self.assertAlmostEqual(candidate.tau[0], diagonal, places=8)
        # tau is the mass on the more attractive product
        self.assertAlmostEqual(candidate.profile.sigma[0, game.product_index('A')], X_SYMMETRIC, places=8)

    def test_candidates_are_minimizers_not_equilibria(self):
        game = symmetric_duopoly()
        candidate = [c for c in solve_interior(game) if c.interior][0]
        _, certified = profile_regret(game, candidate.profile)

        self.assertEqual(candidate.second_order, ['min', 'min'])
        self.assertTrue(np.all(candidate.curvature > 0))
        self.assertFalse(certified)

    def test_stationarity_certificates(self):
        rng = np.random.default_rng(53)
        found = 0
        for _ in range(30):
            game = random_game(rng, n=int(rng.integers(1, 4)), rho=3, min_rho=2, utility=(-1.5, 1.5))
            try:
                candidates = solve_interior(game, starts=8, tol=1e-12)
            except NoInteriorCandidate:
                continue
            for candidate in candidates:
                if not candidate.interior:
                    continue
                found += 1
                constants = compute_interior_constants(game, allow_degenerate=True)
                for i in range(game.n_firms):
                    gradient = payoff_gradient(game, candidate.profile, i)
                    spread = np.max(gradient) - np.min(gradient)
                    self.assertLessEqual(spread, 1e-8 * np.max(np.abs(gradient)))
                    if constants.pinned[i]:
                        continue
                    from_family, definitional = k_values(constants, game, candidate.profile, i)
                    np.testing.assert_allclose(from_family, definitional, rtol=1e-8)
        self.assertGreater(found, 0)

    def test_seed_independence(self):
        game = single_segment_game({'acme': [('A', 3, 1), ('B', 2, 2)], 'rival': [('C', 1, 1), ('D', 5, 0.5)]})
        first = solve_interior(game, seed=1)
        second = solve_interior(game, seed=99, workers=2)

        self.assertEqual(len(first), len(second))
        for a, b in zip(first, second):
            np.testing.assert_allclose(a.tau, b.tau, atol=1e-6)

    def test_preconditions(self):
        with self.assertRaises(InteriorUnsupported):
            solve_interior(single_segment_game({'north': [('A', 1, 1)], 'south': [('B', 1, 1), ('C', 1, 2)]}))
        game = random_game(np.random.default_rng(1), n=2, rho=3, m=3, min_rho=2)
        with self.assertRaises(MultiSegmentUnsupported):
            solve_interior(game)

    def test_candidate_rows_are_normalized(self):
        game = single_segment_game({'a': [('A', 1, 1.0), ('B', 2, 1.0 + 1e-7)], 'b': [('C', 1, 1), ('D', 3, 2)]})
        try:
            candidates = solve_interior(game, starts=8)
        except NoInteriorCandidate as e:
            candidates = e.candidates
        for candidate in candidates:
            sigma = candidate.profile.sigma
            np.testing.assert_allclose(sigma.sum(axis=1), 1.0, atol=1e-12)
            self.assertTrue(np.all(sigma >= 0.0))
            StrategyProfile.from_array(game, sigma)
