from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from typing import Callable, List, Tuple

import numpy as np

from ..exceptions import MultiSegmentUnsupported, CatalogTooLarge
from ..utils.logger import get_logger
from .constant import (
    MAX_SUPPORT_CATALOG, DEFAULT_EPS, DEFAULT_NUMERIC_STARTS, DEFAULT_SEED, NUMERIC_TOL, NUMERIC_MAX_ITER,
    ARMIJO, SUPPORT_ENUMERATION, NUMERIC_MULTISTART,
)
from .game import Game, StrategyProfile
from .interior import affine_coefficients, all_equal, interval_roots, stationary_quadratic
from .payoff import all_payoffs, deviation_gradient, deviation_payoff, opponent_mass


class BestResponse(object):
    '''A firm's best deviation against fixed opponents; `strategy` is a global product vector'''
    def __init__(self, firm: int, strategy: np.ndarray, value: float, exact: bool, method: str):
        self.firm = firm
        self.strategy = strategy
        self.value = value
        self.exact = exact
        self.method = method

    def __repr__(self):
        return f'BestResponse(firm={self.firm}, value={self.value:.6g}, method={self.method})'


class FirmRegret(object):
    def __init__(self, firm: int, payoff: float, best: BestResponse):
        self.firm = firm
        self.payoff = payoff
        self.best = best

    def __repr__(self):
        return f'FirmRegret(firm={self.firm}, regret={self.regret:.3g})'

    @property
    def regret(self) -> float:
        return self.best.value - self.payoff


class RegretReport(object):
    '''Per-firm payoffs, best responses and regrets of one profile'''
    def __init__(self, entries: List[FirmRegret], scale: float):
        self.entries = entries
        self.scale = scale

    def __repr__(self):
        return f'RegretReport(epsilon={self.epsilon:.3g}, firms={len(self.entries)})'

    @property
    def epsilon(self) -> float:
        return max(entry.regret for entry in self.entries)

    @property
    def exact(self) -> bool:
        return all(entry.best.exact for entry in self.entries)

    def is_equilibrium(self, eps: float = DEFAULT_EPS) -> bool:
        '''eps is relative to the game's payoff scale'''
        return self.epsilon <= eps * self.scale

    def to_mapping(self, game: Game) -> dict:
        return {
            'epsilon': self.epsilon,
            'scale': self.scale,
            'exact': self.exact,
            'firms': [
                {
                    'firm': game.firm_ids[entry.firm],
                    'payoff': entry.payoff,
                    'best_response_value': entry.best.value,
                    'regret': entry.regret,
                    'method': entry.best.method,
                    'best_response': {game.product_ids[p]: float(entry.best.strategy[p])
                                      for p in game.catalogs[entry.firm]},
                }
                for entry in self.entries
            ],
        }


def _positive_interval(a, b) -> Tuple[float, float]:
    lo, hi = -np.inf, np.inf
    for a_s, b_s in zip(a, b):
        if b_s > 0:
            lo = max(lo, -a_s / b_s)
        elif b_s < 0:
            hi = min(hi, -a_s / b_s)
        elif a_s <= 0:
            return 1.0, 0.0
    return lo, hi


def _support_stationary_points(w, beta, e, others: float) -> List[np.ndarray]:
    '''Points with equal partials on the open face spanned by one support'''
    if all_equal(e):
        x = (1.0 / beta) / np.sum(1.0 / beta)
        return [x]
    _, _, a, b, _ = affine_coefficients(beta, e)
    if a is None:
        return []
    lo, hi = _positive_interval(a, b)
    if not lo < hi:
        return []
    q2, q1, q0 = stationary_quadratic(w, a, b, e, others)
    return [np.maximum(a + b * tau, 0.0) for tau in interval_roots(q2, q1, q0, lo, hi)]


def best_response_m1(game: Game, firm: int, profile: StrategyProfile) -> BestResponse:
    '''Exact best response in a single-segment market.

    Every nonempty support of the catalog contributes its vertex or the
    stationary points of the support-restricted problem, where the MNL
    denominator carries the opponents' mass as a constant. The maximiser
    over the simplex is among these candidates.
    '''
    if game.n_segments != 1:
        raise MultiSegmentUnsupported(
            f'exact best response needs a single segment, scenario has {game.n_segments}; use best_response_numeric')
    catalog = game.catalogs[firm]
    k = len(catalog)
    if k > MAX_SUPPORT_CATALOG:
        raise CatalogTooLarge(
            f"firm '{game.firm_ids[firm]}' has {k} products; support enumeration supports at most {MAX_SUPPORT_CATALOG}")
    others = opponent_mass(game, profile, firm)
    beta = game.price[firm, 0, catalog]
    e = game.attractiveness[firm, 0, catalog]
    w = beta * game.demand[0] * e

    points = list(np.eye(k))
    for size in range(2, k + 1):
        for support in combinations(range(k), size):
            index = list(support)
            for x in _support_stationary_points(w[index], beta[index], e[index], float(others[0])):
                point = np.zeros(k)
                point[index] = x / x.sum()
                points.append(point)

    strategies = np.zeros((len(points), game.n_products))
    strategies[:, catalog] = np.array(points)
    values = deviation_payoff(game, firm, strategies, others)
    best = int(np.argmax(values))
    return BestResponse(firm, strategies[best], float(values[best]), True, SUPPORT_ENUMERATION)


def project_simplex(v) -> np.ndarray:
    '''Euclidean projection onto the probability simplex (sort based)'''
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    cond = u - cssv / ind > 0
    rho = np.count_nonzero(cond)
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def projected_gradient_ascent(objective: Callable, gradient: Callable, x0, tol: float = NUMERIC_TOL,
                              max_iter: int = NUMERIC_MAX_ITER):
    '''Maximises objective over the simplex; returns the last iterate and every accepted value'''
    x = project_simplex(x0)
    value = objective(x)
    values = [value]
    g = gradient(x)
    step = 1.0 / max(float(np.max(np.abs(g))), 1e-300)
    for _ in range(max_iter):
        g = gradient(x)
        while True:
            candidate = project_simplex(x + step * g)
            delta = candidate - x
            if np.max(np.abs(delta)) <= tol:
                return x, values
            trial = objective(candidate)
            # Armijo along the projection arc
            if trial >= value + ARMIJO * float(g @ delta):
                break
            step *= 0.5
        x, value = candidate, trial
        values.append(value)
        step *= 2.0
    return x, values


def best_response_numeric(game: Game, firm: int, profile: StrategyProfile, starts: int = DEFAULT_NUMERIC_STARTS,
                          tol: float = NUMERIC_TOL, seed: int = DEFAULT_SEED,
                          max_iter: int = NUMERIC_MAX_ITER) -> BestResponse:
    '''Best local optimum of projected-gradient ascent from every vertex and `starts` random points'''
    catalog = game.catalogs[firm]
    k = len(catalog)
    others = opponent_mass(game, profile, firm)

    def embed(x):
        strategy = np.zeros(game.n_products)
        strategy[catalog] = x
        return strategy

    def objective(x):
        return deviation_payoff(game, firm, embed(x), others)

    def gradient(x):
        return deviation_gradient(game, firm, embed(x), others)[catalog]

    rng = np.random.default_rng([seed, firm])
    initial = list(np.eye(k))
    if k > 1:
        initial.extend(rng.dirichlet(np.ones(k), size=starts))

    best_x, best_value = None, -np.inf
    for x0 in initial:
        x, values = projected_gradient_ascent(objective, gradient, x0, tol=tol, max_iter=max_iter)
        if values[-1] > best_value:
            best_x, best_value = x, values[-1]
    return BestResponse(firm, embed(best_x), float(best_value), False, NUMERIC_MULTISTART)


def best_response(game: Game, firm: int, profile: StrategyProfile, starts: int = DEFAULT_NUMERIC_STARTS,
                  seed: int = DEFAULT_SEED) -> BestResponse:
    '''Exact support enumeration when it applies, numeric multi-start otherwise'''
    if game.n_segments == 1 and len(game.catalogs[firm]) <= MAX_SUPPORT_CATALOG:
        return best_response_m1(game, firm, profile)
    return best_response_numeric(game, firm, profile, starts=starts, seed=seed)


def profile_regret(game: Game, profile: StrategyProfile, eps: float = DEFAULT_EPS,
                   starts: int = DEFAULT_NUMERIC_STARTS, seed: int = DEFAULT_SEED, workers: int = 1):
    '''RegretReport of the profile and whether it is an eps-Nash equilibrium (eps relative to payoff scale)'''
    logger = get_logger('verifier')
    payoffs = all_payoffs(game, profile)

    def firm_regret(firm):
        best = best_response(game, firm, profile, starts=starts, seed=seed)
        # the current strategy is always a candidate
        if best.value < payoffs[firm]:
            best = BestResponse(firm, np.array(profile.sigma[firm]), float(payoffs[firm]), best.exact, best.method)
        entry = FirmRegret(firm, float(payoffs[firm]), best)
        logger.log_event('regret', firm=game.firm_ids[firm], payoff=entry.payoff, regret=entry.regret,
                         method=best.method)
        return entry

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(firm_regret, range(game.n_firms)))
    else:
        entries = [firm_regret(firm) for firm in range(game.n_firms)]

    report = RegretReport(entries, game.payoff_scale)
    return report, report.is_equilibrium(eps)
