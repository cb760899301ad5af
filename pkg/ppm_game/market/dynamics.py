from typing import List

import numpy as np

from ..utils.logger import get_logger
from ..utils.utils import rounded_key
from .constant import (
    DEFAULT_MAX_ROUNDS, DEFAULT_DYNAMICS_TOL, DEFAULT_NUMERIC_STARTS, DEFAULT_SEED, IMPROVEMENT_TOL,
    CONVERGED, CYCLE_DETECTED, MAX_ROUNDS,
)
from .game import Game, StrategyProfile
from .payoff import deviation_payoff, opponent_mass
from .verifier import best_response


class DynamicsRound(object):
    def __init__(self, index: int, profile: StrategyProfile, max_gain: float, movement: float, movers: List[int]):
        self.index = index
        self.profile = profile
        self.max_gain = max_gain
        self.movement = movement
        self.movers = movers

    def __repr__(self):
        return f'DynamicsRound({self.index}, movement={self.movement:.3g})'


class DynamicsTrace(object):
    '''Round-by-round record of iterated best responses and why they stopped'''
    def __init__(self, initial: StrategyProfile, rounds: List[DynamicsRound], reason: str):
        self.initial = initial
        self.rounds = rounds
        self.reason = reason

    def __repr__(self):
        return f'DynamicsTrace(rounds={len(self.rounds)}, reason={self.reason})'

    @property
    def final(self) -> StrategyProfile:
        return self.rounds[-1].profile if self.rounds else self.initial

    @property
    def converged(self) -> bool:
        return self.reason == CONVERGED

    def to_mapping(self, game: Game) -> dict:
        return {
            'reason': self.reason,
            'rounds': [
                {
                    'round': r.index,
                    'max_payoff_change': r.max_gain,
                    'movement': r.movement,
                    'movers': [game.firm_ids[i] for i in r.movers],
                    'profile': r.profile.to_mapping(game),
                }
                for r in self.rounds
            ],
            'final': self.final.to_mapping(game),
        }


def best_response_iteration(game: Game, initial: StrategyProfile, max_rounds: int = DEFAULT_MAX_ROUNDS,
                            tol: float = DEFAULT_DYNAMICS_TOL, starts: int = DEFAULT_NUMERIC_STARTS,
                            seed: int = DEFAULT_SEED) -> DynamicsTrace:
    '''Round-robin best responses until the profile stops moving, repeats, or max_rounds is hit'''
    logger = get_logger('dynamics')
    threshold = IMPROVEMENT_TOL * game.payoff_scale
    seen = {rounded_key(initial.sigma)}
    profile = initial
    rounds = []
    reason = MAX_ROUNDS
    for index in range(1, max_rounds + 1):
        start = profile
        max_gain, movers = 0.0, []
        for i in range(game.n_firms):
            current = deviation_payoff(game, i, profile.sigma[i], opponent_mass(game, profile, i))
            best = best_response(game, i, profile, starts=starts, seed=seed)
            gain = best.value - current
            # ties keep the current strategy
            if gain > threshold:
                profile = profile.with_firm(i, best.strategy)
                max_gain = max(max_gain, gain)
                movers.append(i)
        movement = float(np.max(np.abs(profile.sigma - start.sigma)))
        rounds.append(DynamicsRound(index, profile, max_gain, movement, movers))
        logger.log_event('dynamics round', round=index, max_gain=max_gain, movement=movement,
                         movers=[game.firm_ids[i] for i in movers])
        if movement <= tol:
            reason = CONVERGED
            break
        key = rounded_key(profile.sigma)
        if key in seen:
            reason = CYCLE_DETECTED
            break
        seen.add(key)
    return DynamicsTrace(initial, rounds, reason)
