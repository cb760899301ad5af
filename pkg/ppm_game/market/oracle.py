import math
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations, product
from typing import List

import numpy as np

from ..exceptions import InvalidGrid, GridTooLarge
from ..utils.logger import get_logger
from .constant import MAX_GRID_PROFILES, FINE_RESOLUTION, COARSE_RESOLUTION
from .game import Game, StrategyProfile
from .payoff import deviation_payoff


class GridSpec(object):
    '''Resolution h of the per-firm simplex grids; 1/h must be an integer'''
    def __init__(self, resolution: float):
        resolution = float(resolution)
        if not 0 < resolution <= 1:
            raise InvalidGrid(f'grid resolution must lie in (0, 1], got {resolution!r}')
        steps = 1.0 / resolution
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise InvalidGrid(f'1/h must be an integer, got h = {resolution!r}')
        self.resolution = resolution
        self.steps = int(round(steps))

    def __repr__(self):
        return f'GridSpec(h={self.resolution:g})'

    def size(self, k: int) -> int:
        '''Number of grid points on a simplex with k vertices'''
        return math.comb(self.steps + k - 1, k - 1)


class OracleHit(object):
    def __init__(self, profile: StrategyProfile, regrets: np.ndarray):
        self.profile = profile
        self.regrets = regrets

    def __repr__(self):
        return f'OracleHit(regret={self.max_regret:.3g})'

    @property
    def max_regret(self) -> float:
        return float(np.max(self.regrets))

    def to_mapping(self, game: Game) -> dict:
        return {
            'profile': self.profile.to_mapping(game),
            'grid_regret': {firm_id: float(r) for firm_id, r in zip(game.firm_ids, self.regrets)},
        }


def default_resolution(game: Game) -> float:
    if game.n_firms == 2 and all(len(catalog) == 2 for catalog in game.catalogs):
        return FINE_RESOLUTION
    return COARSE_RESOLUTION


def simplex_grid(k: int, resolution: float) -> np.ndarray:
    '''All points of the k-vertex simplex with coordinates in multiples of h, lexicographic order'''
    steps = GridSpec(resolution).steps
    points = []
    # stars and bars: bar positions in increasing order give compositions in lexicographic order
    for bars in combinations(range(steps + k - 1), k - 1):
        edges = (-1,) + bars + (steps + k - 1,)
        points.append([edges[j + 1] - edges[j] - 1 for j in range(k)])
    return np.array(points, dtype=float) / steps


def grid_search_equilibria(game: Game, grid: GridSpec, eps: float, workers: int = 1) -> List[OracleHit]:
    '''Every grid profile whose grid-restricted regret is at most eps (payoff units) for every firm'''
    logger = get_logger('oracle')
    sizes = [grid.size(len(catalog)) for catalog in game.catalogs]
    total = math.prod(sizes)
    if total > MAX_GRID_PROFILES:
        raise GridTooLarge(f'{total} grid profiles at h = {grid.resolution:g}; the oracle supports at most {MAX_GRID_PROFILES}')
    logger.log_event('oracle grid', resolution=grid.resolution, sizes=sizes, total=total)

    points = []
    for catalog in game.catalogs:
        local = simplex_grid(len(catalog), grid.resolution)
        embedded = np.zeros((len(local), game.n_products))
        embedded[:, catalog] = local
        points.append(embedded)
    # per firm and grid point, attractiveness mass offered in every segment
    mass = [points[i] @ game.attractiveness[i].T for i in range(game.n_firms)]

    def firm_regrets(i):
        out = np.zeros(sizes)
        rest = [r for r in range(game.n_firms) if r != i]
        for combo in product(*(range(sizes[r]) for r in rest)):
            others = np.zeros(game.n_segments)
            for r, g in zip(rest, combo):
                others = others + mass[r][g]
            values = deviation_payoff(game, i, points[i], others)
            index = list(combo)
            index.insert(i, slice(None))
            out[tuple(index)] = values.max() - values
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_firm = list(pool.map(firm_regrets, range(game.n_firms)))
    else:
        per_firm = [firm_regrets(i) for i in range(game.n_firms)]
    regrets = np.stack(per_firm, axis=-1)

    hits = []
    # argwhere walks the index grid in C order: lexicographic in the firms' grid points
    for index in np.argwhere(regrets.max(axis=-1) <= eps):
        sigma = np.array([points[i][g] for i, g in enumerate(index)])
        hits.append(OracleHit(StrategyProfile(sigma), regrets[tuple(index)]))
    logger.log_event('oracle hits', hits=len(hits))
    return hits
