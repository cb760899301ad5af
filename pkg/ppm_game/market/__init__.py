__all__ = ['Game',
           'StrategyProfile',
           'PortfolioDistribution',
           'validate_game',
           'validate_profile',
           'firm_payoff',
           'solve_interior',
           'profile_regret',
           'grid_search_equilibria',
           'best_response_iteration',
           ]

from .game import Game, StrategyProfile, PortfolioDistribution, validate_game, validate_profile
from .payoff import firm_payoff
from .interior import solve_interior
from .verifier import profile_regret
from .oracle import grid_search_equilibria
from .dynamics import best_response_iteration
