import argparse
import sys
import time
import traceback

from ._version import __version__
from .base_settings import SolverSettings
from .exceptions import PPMError, ValidationError, NoInteriorCandidate
from .market.constant import DEFAULT_EPS
from .market.dynamics import best_response_iteration
from .market.game import uniform_profile
from .market.interior import solve_interior
from .market.oracle import GridSpec, default_resolution, grid_search_equilibria
from .market.payoff import payoff_breakdown
from .market.portfolio import enumerate_portfolios, portfolio_payoff, portfolio_to_product, product_to_portfolio
from .market.verifier import profile_regret
from .scenario.report import build_report, candidate_mapping, format_table, profile_mapping, write_report
from .scenario.scenario_file import (
    load_scenario, load_profile, load_portfolio_distribution, load_product_distribution,
)
from .utils.logger import get_logger, set_debug

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_NO_INTERIOR = 3


def _common(parser):
    parser.add_argument('--scenario', required=True, help='scenario file')
    parser.add_argument('--out', help='report file (default: standard output)')
    parser.add_argument('--no-timestamp', action='store_true', help='omit the run section for byte-identical reports')
    parser.add_argument('--debug', action='store_true', help='structured debug logging on standard error')
    parser.add_argument('--workers', type=int, help='threads for independent starts, firms or grid slices')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='ppm-game', description='PPM game solver toolkit')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('eval', help='payoff breakdown of a profile')
    _common(p)
    p.add_argument('--profile', required=True, help='profile or report file')
    p.add_argument('--candidate', type=int, default=0, help='candidate index when --profile is a report')
    p.add_argument('--portfolio-dist', help='portfolio distribution file played by --firm')
    p.add_argument('--firm', help='firm id for --portfolio-dist')

    p = commands.add_parser('solve', help='interior stationary points with verification (single segment)')
    _common(p)
    p.add_argument('--seed', type=int)
    p.add_argument('--starts', type=int)
    p.add_argument('--tol', type=float)
    p.add_argument('--max-iter', type=int, dest='max_iter')
    p.add_argument('--eps', type=float, help=f'certification threshold relative to payoff scale (default {DEFAULT_EPS:g})')

    p = commands.add_parser('verify', help='best-response regret of a profile')
    _common(p)
    p.add_argument('--profile', required=True, help='profile or report file')
    p.add_argument('--candidate', type=int, default=0, help='candidate index when --profile is a report')
    p.add_argument('--eps', type=float)
    p.add_argument('--seed', type=int)
    p.add_argument('--numeric-starts', type=int, dest='numeric_starts')

    p = commands.add_parser('oracle', help='grid search for approximate equilibria')
    _common(p)
    p.add_argument('--grid', type=float, help='resolution h; 1/h must be an integer')
    p.add_argument('--eps', type=float, dest='oracle_eps', help='grid regret threshold relative to payoff scale')

    p = commands.add_parser('dynamics', help='iterated round-robin best responses')
    _common(p)
    p.add_argument('--init', default='uniform', help="initial profile file or 'uniform'")
    p.add_argument('--max-rounds', type=int, dest='max_rounds')
    p.add_argument('--tol', type=float, dest='dynamics_tol')
    p.add_argument('--seed', type=int)
    p.add_argument('--numeric-starts', type=int, dest='numeric_starts')
    p.add_argument('--eps', type=float, help='certification threshold for the final profile')

    p = commands.add_parser('convert', help='portfolio <-> product distribution conversion')
    _common(p)
    p.add_argument('--firm', required=True, help='firm id')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--portfolio-dist', help='portfolio distribution file')
    source.add_argument('--product-dist', help='product distribution file')
    return parser


def _regret_table(game, regret) -> str:
    rows = [[game.firm_ids[e.firm], e.payoff, e.best.value, e.regret, e.best.method] for e in regret.entries]
    return format_table(['firm', 'payoff', 'best response', 'regret', 'method'], rows)


def _eval(args, settings):
    game = load_scenario(args.scenario)
    profile = load_profile(game, args.profile, args.candidate)
    body = profile_mapping(game, profile)
    breakdown = payoff_breakdown(game, profile)
    body['probabilities'] = {
        firm_id: {
            sid: {game.product_ids[p]: float(breakdown.probabilities[i, j, p]) for p in game.catalogs[i]}
            for j, sid in enumerate(game.segment_ids)
        }
        for i, firm_id in enumerate(game.firm_ids)
    }
    rows = [[firm_id, body['payoffs'][firm_id]] + [body['shares'][firm_id][sid] for sid in game.segment_ids]
            for firm_id in game.firm_ids]
    table = format_table(['firm', 'payoff'] + [f'share {sid}' for sid in game.segment_ids], rows)

    if args.portfolio_dist:
        if not args.firm:
            raise ValidationError('--portfolio-dist needs --firm')
        firm = game.firm_index(args.firm)
        distribution = load_portfolio_distribution(game, firm, args.portfolio_dist)
        value = portfolio_payoff(game, profile, distribution)
        body['portfolio_payoff'] = {'firm': args.firm, 'payoff': value,
                                    'portfolios': distribution.to_mapping(game)}
        table += f'\n\nfirm {args.firm} playing the portfolio distribution: payoff {value:.6g}'
    return game, {}, body, table, EXIT_OK


def _solve(args, settings):
    game = load_scenario(args.scenario)
    parameters = settings.solver_params()
    parameters['eps'] = settings.eps
    try:
        candidates = solve_interior(game, workers=settings.workers, **settings.solver_params())
    except NoInteriorCandidate as e:
        body = {
            'status': 'no-interior-candidate',
            'message': str(e),
            'candidates': [candidate_mapping(game, c) for c in e.candidates],
        }
        return game, parameters, body, f'no interior candidate: {e}', EXIT_NO_INTERIOR

    entries, rows = [], []
    for k, candidate in enumerate(candidates):
        regret, certified = profile_regret(game, candidate.profile, eps=settings.eps, seed=settings.seed,
                                           workers=settings.workers)
        entries.append(candidate_mapping(game, candidate, regret, certified))
        tau = ', '.join(f'{t:.6g}' for t in candidate.tau)
        labels = ', '.join(str(label) for label in candidate.second_order)
        rows.append([k, tau, candidate.interior, labels, regret.epsilon, certified])
    body = {
        'status': 'ok',
        'certified': sum(entry['verification']['certified'] for entry in entries),
        'candidates': entries,
    }
    table = format_table(['#', 'tau', 'interior', 'second order', 'epsilon', 'certified'], rows)
    return game, parameters, body, table, EXIT_OK


def _verify(args, settings):
    game = load_scenario(args.scenario)
    profile = load_profile(game, args.profile, args.candidate)
    regret, certified = profile_regret(game, profile, eps=settings.eps, starts=settings.numeric_starts,
                                       seed=settings.seed, workers=settings.workers)
    parameters = dict(eps=settings.eps, seed=settings.seed, numeric_starts=settings.numeric_starts)
    body = profile_mapping(game, profile)
    body['verification'] = regret.to_mapping(game)
    body['verification']['certified'] = certified
    table = _regret_table(game, regret) + f'\n\nepsilon {regret.epsilon:.6g}, certified: {certified}'
    return game, parameters, body, table, EXIT_OK


def _oracle(args, settings):
    game = load_scenario(args.scenario)
    grid = GridSpec(settings.grid if settings.grid is not None else default_resolution(game))
    eps = settings.oracle_eps * game.payoff_scale
    hits = grid_search_equilibria(game, grid, eps, workers=settings.workers)
    parameters = dict(grid=grid.resolution, eps=settings.oracle_eps, eps_absolute=eps)
    body = {'hits': [hit.to_mapping(game) for hit in hits]}
    rows = []
    for k, hit in enumerate(hits):
        sigma = '; '.join(', '.join(f'{hit.profile.sigma[i, p]:.4g}' for p in game.catalogs[i])
                          for i in range(game.n_firms))
        rows.append([k, sigma, hit.max_regret])
    table = format_table(['#', 'profile', 'grid regret'], rows) + f'\n\n{len(hits)} grid profiles within {eps:.6g}'
    return game, parameters, body, table, EXIT_OK


def _dynamics(args, settings):
    game = load_scenario(args.scenario)
    initial = uniform_profile(game) if args.init == 'uniform' else load_profile(game, args.init)
    trace = best_response_iteration(game, initial, max_rounds=settings.max_rounds, tol=settings.dynamics_tol,
                                    starts=settings.numeric_starts, seed=settings.seed)
    regret, certified = profile_regret(game, trace.final, eps=settings.eps, starts=settings.numeric_starts,
                                       seed=settings.seed, workers=settings.workers)
    parameters = dict(init=args.init, max_rounds=settings.max_rounds, tol=settings.dynamics_tol,
                      seed=settings.seed, numeric_starts=settings.numeric_starts, eps=settings.eps)
    body = trace.to_mapping(game)
    body['verification'] = regret.to_mapping(game)
    body['verification']['certified'] = certified
    rows = [[r.index, r.max_gain, r.movement, ', '.join(game.firm_ids[i] for i in r.movers)] for r in trace.rounds]
    table = (format_table(['round', 'max gain', 'movement', 'movers'], rows)
             + f'\n\n{trace.reason} after {len(trace.rounds)} rounds; final epsilon {regret.epsilon:.6g}')
    return game, parameters, body, table, EXIT_OK


def _convert(args, settings):
    game = load_scenario(args.scenario)
    firm = game.firm_index(args.firm)
    enumeration = enumerate_portfolios(game, firm)
    if args.portfolio_dist:
        distribution = load_portfolio_distribution(game, firm, args.portfolio_dist)
        sigma = portfolio_to_product(enumeration, distribution)
        result = {game.product_ids[p]: float(sigma[p]) for p in game.catalogs[firm]}
        body = {'firm': args.firm, 'direction': 'portfolio-to-product', 'product_distribution': result}
        table = format_table(['product', 'mass'], [[pid, mass] for pid, mass in result.items()])
    else:
        sigma = load_product_distribution(game, firm, args.product_dist)
        result = product_to_portfolio(enumeration, sigma).to_mapping(game)
        body = {'firm': args.firm, 'direction': 'product-to-portfolio', 'portfolio_distribution': result}
        table = format_table(['portfolio', 'mass'], [['{' + ', '.join(e['products']) + '}', e['mass']] for e in result])
    return game, {'firm': args.firm}, body, table, EXIT_OK


COMMANDS = {
    'eval': _eval,
    'solve': _solve,
    'verify': _verify,
    'oracle': _oracle,
    'dynamics': _dynamics,
    'convert': _convert,
}


def run_command(argv=None) -> int:
    '''Runs one subcommand; returns the process exit code'''
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_VALIDATION

    set_debug(args.debug)
    logger = get_logger('cli')
    started = time.perf_counter()
    try:
        settings = SolverSettings(dict(vars(args), timestamp=not args.no_timestamp))
        game, parameters, body, table, code = COMMANDS[args.command](args, settings)
        elapsed = time.perf_counter() - started
        report = build_report(args.command, game, parameters, body, timestamp=settings.timestamp, elapsed=elapsed)
        write_report(report, args.out)
    except ValidationError as e:
        logger.error(f'error: {e}')
        return EXIT_VALIDATION
    except PPMError as e:
        logger.error(f'error: {e}')
        return EXIT_INTERNAL
    except Exception as e:
        logger.error(f'internal error: {e}')
        logger.debug(traceback.format_exc())
        return EXIT_INTERNAL

    # the table must not interleave with a report on standard output
    stream = sys.stderr if args.out in (None, '-') else sys.stdout
    stream.write(table + '\n')
    return code


def main() -> int:
    return run_command(sys.argv[1:])
