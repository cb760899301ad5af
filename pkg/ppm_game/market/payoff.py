import numpy as np

from .game import Game, StrategyProfile


class PayoffBreakdown(object):
    '''Payoffs with their per (firm, segment, product) choice probabilities and revenue terms'''
    def __init__(self, payoffs, probabilities, contributions, denominators):
        self.payoffs = payoffs
        self.probabilities = probabilities
        self.contributions = contributions
        self.denominators = denominators

    def __repr__(self):
        return 'PayoffBreakdown(' + ', '.join(f'{u:.6g}' for u in self.payoffs) + ')'


def segment_denominators(game: Game, profile: StrategyProfile) -> np.ndarray:
    '''D_j = sum over firms r and products q of e_rjq * sigma_rq'''
    return np.einsum('rjq,rq->j', game.attractiveness, profile.sigma)


def choice_probabilities(game: Game, profile: StrategyProfile) -> np.ndarray:
    '''MNL probability P_ijp that a segment-j customer picks product p of firm i'''
    offered_mass = game.attractiveness * profile.sigma[:, None, :]
    return offered_mass / segment_denominators(game, profile)[None, :, None]


def payoff_breakdown(game: Game, profile: StrategyProfile) -> PayoffBreakdown:
    denominators = segment_denominators(game, profile)
    probabilities = game.attractiveness * profile.sigma[:, None, :] / denominators[None, :, None]
    contributions = game.price * game.demand[None, :, None] * probabilities * profile.sigma[:, None, :]
    payoffs = contributions.sum(axis=(1, 2))
    return PayoffBreakdown(payoffs, probabilities, contributions, denominators)


def firm_payoff(game: Game, profile: StrategyProfile, firm: int):
    '''Expected shared surplus u_i and the full breakdown it was read from'''
    breakdown = payoff_breakdown(game, profile)
    return float(breakdown.payoffs[firm]), breakdown


def all_payoffs(game: Game, profile: StrategyProfile) -> np.ndarray:
    return payoff_breakdown(game, profile).payoffs


def market_shares(breakdown: PayoffBreakdown) -> np.ndarray:
    '''Share of every segment won by every firm, shape (n, m)'''
    return breakdown.probabilities.sum(axis=2)


def opponent_mass(game: Game, profile: StrategyProfile, firm: int) -> np.ndarray:
    '''Per segment, the attractiveness mass offered by every firm except `firm`'''
    sigma = np.array(profile.sigma)
    sigma[firm] = 0.0
    return np.einsum('rjq,rq->j', game.attractiveness, sigma)


def deviation_payoff(game: Game, firm: int, strategies, others) -> np.ndarray:
    '''Payoff of `firm` for each row of `strategies` (global product vectors),
    opponents summarised by their per-segment mass `others`'''
    x = np.atleast_2d(np.asarray(strategies, dtype=float))
    e = game.attractiveness[firm]
    weight = game.price[firm] * game.demand[:, None] * e
    numerators = (x ** 2) @ weight.T
    denominators = x @ e.T + np.asarray(others)[None, :]
    values = (numerators / denominators).sum(axis=1)
    return values if np.ndim(strategies) > 1 else float(values[0])


def deviation_gradient(game: Game, firm: int, strategy, others) -> np.ndarray:
    '''Gradient over all global coordinates of deviation_payoff at one strategy'''
    x = np.asarray(strategy, dtype=float)
    e = game.attractiveness[firm]
    weight = game.price[firm] * game.demand[:, None] * e
    denominators = e @ x + np.asarray(others)
    surplus = weight @ (x ** 2)
    terms = 2.0 * weight * x[None, :] * denominators[:, None] - surplus[:, None] * e
    return (terms / denominators[:, None] ** 2).sum(axis=0)


def payoff_gradient(game: Game, profile: StrategyProfile, firm: int) -> np.ndarray:
    '''Partial derivatives of u_i with respect to sigma_is, s in firm i's catalog (catalog order)'''
    gradient = deviation_gradient(game, firm, profile.sigma[firm], opponent_mass(game, profile, firm))
    return gradient[game.catalogs[firm]]
