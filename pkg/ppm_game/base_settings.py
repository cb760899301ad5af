from .exceptions import InvalidSettings
from .market.constant import (
    DEFAULT_SEED, DEFAULT_STARTS, DEFAULT_TOL, DEFAULT_MAX_ITER, DEFAULT_EPS,
    DEFAULT_ORACLE_EPS, DEFAULT_MAX_ROUNDS, DEFAULT_DYNAMICS_TOL, DEFAULT_NUMERIC_STARTS,
)


class SolverSettings(object):
    '''Creates Settings object'''
    def __init__(self, data: dict = None):
        data = {k: v for k, v in (data or {}).items() if v is not None}
        self.seed = int(data.get('seed', DEFAULT_SEED))
        self.starts = int(data.get('starts', DEFAULT_STARTS))
        self.tol = float(data.get('tol', DEFAULT_TOL))
        self.max_iter = int(data.get('max_iter', DEFAULT_MAX_ITER))
        self.eps = float(data.get('eps', DEFAULT_EPS))
        self.oracle_eps = float(data.get('oracle_eps', DEFAULT_ORACLE_EPS))
        self.grid = data.get('grid')
        self.max_rounds = int(data.get('max_rounds', DEFAULT_MAX_ROUNDS))
        self.dynamics_tol = float(data.get('dynamics_tol', DEFAULT_DYNAMICS_TOL))
        self.numeric_starts = int(data.get('numeric_starts', DEFAULT_NUMERIC_STARTS))
        self.workers = int(data.get('workers', 1))
        self.debug = bool(data.get('debug', False))
        self.timestamp = bool(data.get('timestamp', True))
        self._check()

    def __repr__(self):
        return f'Settings(seed={self.seed}, starts={self.starts}, tol={self.tol})'

    def _check(self):
        for name in ('starts', 'max_iter', 'max_rounds'):
            if getattr(self, name) < 1:
                raise InvalidSettings(f'{name} must be at least 1, got {getattr(self, name)}')
        for name in ('tol', 'dynamics_tol'):
            if not getattr(self, name) > 0:
                raise InvalidSettings(f'{name} must be positive, got {getattr(self, name)}')
        for name in ('eps', 'oracle_eps'):
            if getattr(self, name) < 0:
                raise InvalidSettings(f'{name} must be nonnegative, got {getattr(self, name)}')
        if self.numeric_starts < 0:
            raise InvalidSettings(f'numeric_starts must be nonnegative, got {self.numeric_starts}')
        if self.workers < 1:
            raise InvalidSettings(f'workers must be at least 1, got {self.workers}')
        if self.grid is not None:
            self.grid = float(self.grid)
            if not 0 < self.grid <= 1:
                raise InvalidSettings(f'grid resolution must lie in (0, 1], got {self.grid}')

    def solver_params(self) -> dict:
        return dict(seed=self.seed, starts=self.starts, tol=self.tol, max_iter=self.max_iter)
