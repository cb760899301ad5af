import json
from pathlib import Path
from typing import Mapping

import numpy as np

from ..exceptions import DuplicateId, MalformedScenario, MissingScenario, ParseError
from ..market.game import (
    Game, StrategyProfile, PortfolioDistribution, validate_game, validate_profile, validate_distribution,
    validate_portfolio_distribution,
)
from ..utils.logger import get_logger
from ..utils.utils import digest
from .constant import PROFILE_KEY, CANDIDATES_KEY, DISTRIBUTION_KEY, PORTFOLIOS_KEY


def read_json(path, kind: str = 'scenario'):
    '''Parsed content of a structured-text file; errors name the file, line and column'''
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except FileNotFoundError:
        raise MissingScenario(f"{kind} file '{path}' does not exist")
    except UnicodeDecodeError as e:
        raise ParseError(f"{path}: not valid UTF-8 at byte {e.start}")
    except OSError as e:
        raise MissingScenario(f"{kind} file '{path}' cannot be read: {e.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}")


def scenario_digest(game: Game) -> str:
    return digest(game.to_mapping())


def load_scenario(path) -> Game:
    game = validate_game(read_json(path, 'scenario'))
    get_logger('scenario').log_event('scenario load', path=str(path), digest=scenario_digest(game),
                                     n=game.n_firms, m=game.n_segments, rho=game.n_products)
    return game


def load_profile(game: Game, path, candidate: int = 0) -> StrategyProfile:
    '''Profile from {"profile": ...}, a bare firm mapping, or a report's candidate list'''
    data = read_json(path, 'profile')
    if isinstance(data, Mapping) and CANDIDATES_KEY in data:
        candidates = data[CANDIDATES_KEY]
        if not isinstance(candidates, list) or not 0 <= candidate < len(candidates):
            raise MalformedScenario(f'{path}: report has no candidate {candidate}')
        data = candidates[candidate]
    if isinstance(data, Mapping) and PROFILE_KEY in data:
        data = data[PROFILE_KEY]
    return validate_profile(game, data)


def load_product_distribution(game: Game, firm: int, path) -> np.ndarray:
    '''{product id: mass} (optionally under "distribution") as a global product vector'''
    data = read_json(path, 'distribution')
    if isinstance(data, Mapping) and DISTRIBUTION_KEY in data:
        data = data[DISTRIBUTION_KEY]
    return validate_distribution(game, firm, data)


def load_portfolio_distribution(game: Game, firm: int, path) -> PortfolioDistribution:
    '''{"portfolios": [{"products": [ids], "mass": x}, ...]}'''
    data = read_json(path, 'distribution')
    entries = data.get(PORTFOLIOS_KEY) if isinstance(data, Mapping) else None
    if not isinstance(entries, list):
        raise MalformedScenario(f"{path}: expected an object with a '{PORTFOLIOS_KEY}' list")
    mass = {}
    for k, entry in enumerate(entries):
        if not isinstance(entry, Mapping) or 'products' not in entry or 'mass' not in entry:
            raise MalformedScenario(f"{PORTFOLIOS_KEY}[{k}]: expected an object with 'products' and 'mass'")
        if not isinstance(entry['products'], list):
            raise MalformedScenario(f'{PORTFOLIOS_KEY}[{k}].products: expected a list')
        key = frozenset(game.product_index(pid) for pid in entry['products'])
        if key in mass:
            raise DuplicateId(f"{PORTFOLIOS_KEY}[{k}]: portfolio {sorted(entry['products'])} listed twice")
        mass[key] = entry['mass']
    return validate_portfolio_distribution(game, firm, mass)
