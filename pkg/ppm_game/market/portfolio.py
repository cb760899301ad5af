from itertools import combinations
from typing import Dict, Tuple

import numpy as np

from ..exceptions import CatalogTooLarge
from .constant import MAX_PORTFOLIO_CATALOG
from .game import Game, StrategyProfile, PortfolioDistribution
from .payoff import deviation_payoff, opponent_mass


class PortfolioEnumeration(object):
    '''All pure portfolios of one firm: nonempty catalog subsets ordered by size, then lexicographically'''
    def __init__(self, firm: int, n_products: int, subsets: Tuple[Tuple[int, ...], ...], counts: Dict[int, int]):
        self.firm = firm
        self.n_products = n_products
        self.subsets = subsets
        self.counts = counts

    def __repr__(self):
        return f'PortfolioEnumeration(firm={self.firm}, portfolios={len(self.subsets)})'

    def __len__(self):
        return len(self.subsets)


def enumerate_portfolios(game: Game, firm: int) -> PortfolioEnumeration:
    catalog = [int(p) for p in game.catalogs[firm]]
    if len(catalog) > MAX_PORTFOLIO_CATALOG:
        raise CatalogTooLarge(
            f"firm '{game.firm_ids[firm]}' has {len(catalog)} products; portfolio enumeration supports at most {MAX_PORTFOLIO_CATALOG}")
    subsets = tuple(subset for size in range(1, len(catalog) + 1) for subset in combinations(catalog, size))
    # every product lies in half of the nonempty subsets
    counts = {p: 2 ** (len(catalog) - 1) for p in catalog}
    return PortfolioEnumeration(firm, game.n_products, subsets, counts)


def portfolio_to_product(enumeration: PortfolioEnumeration, distribution: PortfolioDistribution) -> np.ndarray:
    '''sigma(p) = sum over portfolios L containing p of mass(L) / |L|'''
    sigma = np.zeros(enumeration.n_products)
    for subset in enumeration.subsets:
        mass = distribution.mass.get(frozenset(subset), 0.0)
        if mass:
            sigma[list(subset)] += mass / len(subset)
    return sigma


def product_to_portfolio(enumeration: PortfolioEnumeration, sigma) -> PortfolioDistribution:
    '''mass(L) = sum over p in L of sigma(p) / c_p, c_p the number of portfolios containing p'''
    sigma = np.asarray(sigma, dtype=float)
    scaled = {p: sigma[p] / count for p, count in enumeration.counts.items()}
    mass = {frozenset(subset): float(sum(scaled[p] for p in subset)) for subset in enumeration.subsets}
    return PortfolioDistribution(enumeration.firm, mass)


def portfolio_payoff(game: Game, profile: StrategyProfile, distribution: PortfolioDistribution) -> float:
    '''Payoff of a firm playing a portfolio distribution against the profile's opponents'''
    firm = distribution.firm
    sigma = portfolio_to_product(enumerate_portfolios(game, firm), distribution)
    return deviation_payoff(game, firm, sigma, opponent_mass(game, profile, firm))
