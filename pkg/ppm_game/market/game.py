import math
from typing import Dict, FrozenSet, List, Mapping

import numpy as np

from ..exceptions import (
    MalformedScenario, DuplicateId, UnknownId, EmptyCatalog, NonpositivePrice, NonpositiveDemand,
    UtilityOutOfRange, OffCatalogMass, NotNormalized, NegativeMass,
)
from .constant import UTILITY_BOUND, NORMALIZATION_TOL


def _readonly(array, dtype=float):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


class Game(object):
    '''PPM game: firms, market segments, catalogs, prices and utilities.

    Arrays are indexed (firm i, segment j, product p) over the global product
    enumeration; entries for p outside a firm's catalog are zero.
    '''
    def __init__(self, firm_ids, segment_ids, demand, product_ids, price, utility, offered):
        self.firm_ids = tuple(firm_ids)
        self.segment_ids = tuple(segment_ids)
        self.product_ids = tuple(product_ids)
        self.demand = _readonly(demand)
        self.offered = _readonly(offered, dtype=bool)
        self.price = _readonly(np.where(self.offered[:, None, :], price, 0.0))
        self.utility = _readonly(np.where(self.offered[:, None, :], utility, 0.0))
        self.attractiveness = _readonly(np.where(self.offered[:, None, :], np.exp(self.utility), 0.0))
        self.catalogs = tuple(_readonly(np.flatnonzero(row), dtype=int) for row in self.offered)

        self._firm_index = {firm_id: i for i, firm_id in enumerate(self.firm_ids)}
        self._product_index = {product_id: p for p, product_id in enumerate(self.product_ids)}

    def __repr__(self):
        return f'Game(n={self.n_firms}, m={self.n_segments}, rho={self.n_products})'

    @property
    def n_firms(self) -> int:
        return len(self.firm_ids)

    @property
    def n_segments(self) -> int:
        return len(self.segment_ids)

    @property
    def n_products(self) -> int:
        return len(self.product_ids)

    @property
    def payoff_scale(self) -> float:
        '''Sum over segments of Q_j times the largest price; bounds every payoff'''
        return float(np.sum(self.demand * self.price.max(axis=(0, 2))))

    def firm_index(self, firm_id) -> int:
        try:
            return self._firm_index[str(firm_id)]
        except KeyError:
            raise UnknownId(f"unknown firm id '{firm_id}'")

    def product_index(self, product_id) -> int:
        try:
            return self._product_index[str(product_id)]
        except KeyError:
            raise UnknownId(f"unknown product id '{product_id}'")

    def find_product(self, product_id):
        return self._product_index.get(str(product_id))

    def catalog_ids(self, firm: int) -> List[str]:
        return [self.product_ids[p] for p in self.catalogs[firm]]

    def to_mapping(self) -> dict:
        '''Scenario-schema mapping of this game'''
        return {
            'segments': [{'id': sid, 'demand': float(q)} for sid, q in zip(self.segment_ids, self.demand)],
            'firms': [
                {
                    'id': firm_id,
                    'products': [
                        {
                            'id': self.product_ids[p],
                            'price': [float(x) for x in self.price[i, :, p]],
                            'utility': [float(x) for x in self.utility[i, :, p]],
                        }
                        for p in self.catalogs[i]
                    ],
                }
                for i, firm_id in enumerate(self.firm_ids)
            ],
        }


class StrategyProfile(object):
    '''One product-level mixed strategy per firm, embedded in the global product enumeration'''
    def __init__(self, sigma):
        self.sigma = _readonly(sigma)

    def __repr__(self):
        rows = ', '.join('(' + ', '.join(f'{x:.4g}' for x in row) + ')' for row in self.sigma)
        return f'StrategyProfile({rows})'

    @classmethod
    def from_array(cls, game: Game, sigma, tol: float = NORMALIZATION_TOL) -> 'StrategyProfile':
        '''Checked construction; masses in [-tol, 0) are read as zero'''
        sigma = np.array(sigma, dtype=float).reshape(game.n_firms, game.n_products)
        for i in range(game.n_firms):
            row = sigma[i]
            firm_id = game.firm_ids[i]
            if np.any(row < -tol) or not np.all(np.isfinite(row)):
                raise NegativeMass(f"firm '{firm_id}': masses must be finite and nonnegative")
            if np.any(np.abs(row[~game.offered[i]]) > tol):
                raise OffCatalogMass(f"firm '{firm_id}': positive mass outside its catalog")
            total = row[game.offered[i]].sum()
            if abs(total - 1.0) > tol:
                raise NotNormalized(f"firm '{firm_id}': masses sum to {total!r}, expected 1")
        sigma = np.where(game.offered, np.maximum(sigma, 0.0), 0.0)
        return cls(sigma)

    def firm(self, i: int) -> np.ndarray:
        return self.sigma[i]

    def with_firm(self, i: int, vector) -> 'StrategyProfile':
        sigma = np.array(self.sigma)
        sigma[i] = vector
        return StrategyProfile(sigma)

    def to_mapping(self, game: Game) -> Dict[str, Dict[str, float]]:
        return {
            firm_id: {game.product_ids[p]: float(self.sigma[i, p]) for p in game.catalogs[i]}
            for i, firm_id in enumerate(game.firm_ids)
        }


class PortfolioDistribution(object):
    '''Distribution of one firm over nonempty subsets (pure portfolios) of its catalog'''
    def __init__(self, firm: int, mass: Mapping[FrozenSet[int], float]):
        self.firm = firm
        self.mass = {frozenset(k): float(v) for k, v in mass.items()}

    def __repr__(self):
        return f'PortfolioDistribution(firm={self.firm}, portfolios={len(self.mass)})'

    def to_mapping(self, game: Game) -> List[dict]:
        return [
            {'products': sorted(game.product_ids[p] for p in subset), 'mass': mass}
            for subset, mass in sorted(self.mass.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
        ]


def _field(data, key, path):
    if not isinstance(data, Mapping):
        raise MalformedScenario(f'{path}: expected an object')
    if key not in data:
        raise MalformedScenario(f"{path}: missing key '{key}'")
    return data[key]


def _list(value, path):
    if not isinstance(value, list):
        raise MalformedScenario(f'{path}: expected a list')
    return value


def _number(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedScenario(f'{path}: expected a number, got {value!r}')
    return float(value)


def _per_segment(value, m, path) -> List[float]:
    values = _list(value, path)
    if len(values) != m:
        raise MalformedScenario(f'{path}: expected {m} per-segment values, got {len(values)}')
    return [_number(x, f'{path}[{j}]') for j, x in enumerate(values)]


def validate_game(data) -> Game:
    '''Builds a Game from a parsed scenario mapping, enforcing every game invariant'''
    segments = _list(_field(data, 'segments', 'scenario'), 'segments')
    firms = _list(_field(data, 'firms', 'scenario'), 'firms')
    if not segments:
        raise MalformedScenario('segments: at least one segment is required')
    if not firms:
        raise MalformedScenario('firms: at least one firm is required')

    segment_ids, demand = [], []
    for j, segment in enumerate(segments):
        sid = str(_field(segment, 'id', f'segments[{j}]'))
        if sid in segment_ids:
            raise DuplicateId(f"duplicate segment id '{sid}'")
        q = _number(_field(segment, 'demand', f'segments[{j}]'), f'segments[{j}].demand')
        if not (math.isfinite(q) and q > 0):
            raise NonpositiveDemand(f"segment '{sid}': demand must be positive, got {q!r}")
        segment_ids.append(sid)
        demand.append(q)
    m = len(segment_ids)

    firm_ids, offers = [], []
    for i, firm in enumerate(firms):
        fid = str(_field(firm, 'id', f'firms[{i}]'))
        if fid in firm_ids:
            raise DuplicateId(f"duplicate firm id '{fid}'")
        products = _list(_field(firm, 'products', f'firms[{i}]'), f'firms[{i}].products')
        if not products:
            raise EmptyCatalog(f"firm '{fid}' offers no products; a firm must offer at least one product")
        offer = {}
        for k, product in enumerate(products):
            path = f'firms[{i}].products[{k}]'
            pid = str(_field(product, 'id', path))
            if pid in offer:
                raise DuplicateId(f"firm '{fid}': duplicate product id '{pid}'")
            price = _per_segment(_field(product, 'price', path), m, f'{path}.price')
            utility = _per_segment(_field(product, 'utility', path), m, f'{path}.utility')
            for j, beta in enumerate(price):
                if not (math.isfinite(beta) and beta > 0):
                    raise NonpositivePrice(
                        f"firm '{fid}', product '{pid}', segment '{segment_ids[j]}': price must be positive, got {beta!r}")
            for j, u in enumerate(utility):
                if not (math.isfinite(u) and abs(u) <= UTILITY_BOUND):
                    raise UtilityOutOfRange(
                        f"firm '{fid}', product '{pid}', segment '{segment_ids[j]}': |utility| must be at most {UTILITY_BOUND:g}, got {u!r}")
            offer[pid] = (price, utility)
        firm_ids.append(fid)
        offers.append(offer)

    # global enumeration: lexicographic by product id
    product_ids = sorted({pid for offer in offers for pid in offer})
    index = {pid: p for p, pid in enumerate(product_ids)}
    n, rho = len(firm_ids), len(product_ids)
    price = np.zeros((n, m, rho))
    utility = np.zeros((n, m, rho))
    offered = np.zeros((n, rho), dtype=bool)
    for i, offer in enumerate(offers):
        for pid, (beta, u) in offer.items():
            p = index[pid]
            offered[i, p] = True
            price[i, :, p] = beta
            utility[i, :, p] = u

    return Game(firm_ids, segment_ids, demand, product_ids, price, utility, offered)


def validate_distribution(game: Game, firm: int, masses) -> np.ndarray:
    '''One firm's {product id: mass} as a global product vector'''
    firm_id = game.firm_ids[firm]
    if not isinstance(masses, Mapping):
        raise MalformedScenario(f"profile['{firm_id}']: expected an object mapping product ids to masses")
    sigma = np.zeros(game.n_products)
    for product_id, value in masses.items():
        mass = _number(value, f"profile['{firm_id}']['{product_id}']")
        if not math.isfinite(mass) or mass < 0:
            raise NegativeMass(f"firm '{firm_id}', product '{product_id}': mass must be nonnegative, got {mass!r}")
        p = game.find_product(str(product_id))
        if p is None or not game.offered[firm, p]:
            if mass > 0:
                raise OffCatalogMass(f"firm '{firm_id}': product '{product_id}' is not in its catalog")
            continue
        sigma[p] = mass
    total = sigma.sum()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"firm '{firm_id}': masses sum to {total!r}, expected 1")
    return sigma


def validate_profile(game: Game, data) -> StrategyProfile:
    '''Maps {firm id: {product id: mass}} onto the global enumeration'''
    if not isinstance(data, Mapping):
        raise MalformedScenario('profile: expected an object mapping firm ids to product masses')
    for firm_id in data:
        game.firm_index(firm_id)
    sigma = np.array([validate_distribution(game, i, data.get(firm_id, {}))
                      for i, firm_id in enumerate(game.firm_ids)])
    return StrategyProfile(sigma)


def validate_portfolio_distribution(game: Game, firm: int, mass: Mapping) -> PortfolioDistribution:
    '''mass maps collections of global product indices to probabilities'''
    catalog = set(int(p) for p in game.catalogs[firm])
    firm_id = game.firm_ids[firm]
    checked = {}
    for key, value in mass.items():
        subset = frozenset(int(p) for p in key)
        label = sorted(game.product_ids[p] if 0 <= p < game.n_products else str(p) for p in subset)
        if not subset:
            raise MalformedScenario(f"firm '{firm_id}': portfolios must be nonempty")
        if not subset <= catalog:
            raise OffCatalogMass(f"firm '{firm_id}': portfolio {label} is not a subset of its catalog")
        if subset in checked:
            raise DuplicateId(f"firm '{firm_id}': portfolio {label} listed twice")
        value = _number(value, f"portfolio {label}")
        if not math.isfinite(value) or value < 0 or value > 1:
            raise NegativeMass(f"firm '{firm_id}': portfolio {label} mass must lie in [0, 1], got {value!r}")
        checked[subset] = value
    total = sum(checked.values())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"firm '{firm_id}': portfolio masses sum to {total!r}, expected 1")
    return PortfolioDistribution(firm, checked)


def uniform_profile(game: Game) -> StrategyProfile:
    sigma = game.offered / game.offered.sum(axis=1, keepdims=True)
    return StrategyProfile(sigma)
