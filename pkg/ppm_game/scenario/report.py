import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

from .._version import __version__
from ..market.game import Game, StrategyProfile
from ..market.interior import StationaryCandidate
from ..market.payoff import payoff_breakdown, market_shares
from ..market.verifier import RegretReport
from ..utils.utils import json_serial
from .constant import TOOL_NAME, REPORT_INDENT, STDOUT
from .scenario_file import scenario_digest


def profile_mapping(game: Game, profile: StrategyProfile) -> dict:
    '''Profile by id with every firm's payoff and per-segment market share'''
    breakdown = payoff_breakdown(game, profile)
    shares = market_shares(breakdown)
    return {
        'profile': profile.to_mapping(game),
        'payoffs': {firm_id: float(u) for firm_id, u in zip(game.firm_ids, breakdown.payoffs)},
        'shares': {
            firm_id: {sid: float(shares[i, j]) for j, sid in enumerate(game.segment_ids)}
            for i, firm_id in enumerate(game.firm_ids)
        },
    }


def candidate_mapping(game: Game, candidate: StationaryCandidate, regret: Optional[RegretReport] = None,
                      certified: Optional[bool] = None) -> dict:
    out = {
        'tau': {firm_id: float(t) for firm_id, t in zip(game.firm_ids, candidate.tau)},
        'reference': {firm_id: game.product_ids[p] for firm_id, p in zip(game.firm_ids, candidate.references)},
        'interior': candidate.interior,
        'residual': {firm_id: float(r) for firm_id, r in zip(game.firm_ids, candidate.residual)},
        'second_order': dict(zip(game.firm_ids, candidate.second_order)),
    }
    out.update(profile_mapping(game, candidate.profile))
    if regret is not None:
        out['verification'] = regret.to_mapping(game)
        out['verification']['certified'] = certified
    return out


def build_report(command: str, game: Game, parameters: dict, body: dict, timestamp: bool = True,
                 elapsed: float = None) -> dict:
    '''Report document: tool, scenario digest, parameters, command results and (optionally) run timing'''
    report = {
        'tool': TOOL_NAME,
        'version': __version__,
        'command': command,
        'scenario': {
            'digest': scenario_digest(game),
            'firms': game.n_firms,
            'segments': game.n_segments,
            'products': game.n_products,
        },
        'parameters': parameters,
    }
    report.update(body)
    if timestamp:
        report['run'] = {
            'timestamp': datetime.now(timezone.utc),
            'elapsed_seconds': elapsed,
        }
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=REPORT_INDENT, default=json_serial) + '\n'


def write_report(report: dict, out: str = None):
    text = dumps_report(report)
    if out is None or out == STDOUT:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding='utf-8')


def format_table(headers: List[str], rows: List[list]) -> str:
    '''Fixed-width text table; floats printed with 6 significant digits'''
    cells = [[f'{c:.6g}' if isinstance(c, float) else str(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(row[k]) for row in cells)) if cells else len(h) for k, h in enumerate(headers)]
    lines = ['  '.join(h.ljust(w) for h, w in zip(headers, widths)),
             '  '.join('-' * w for w in widths)]
    lines.extend('  '.join(c.ljust(w) for c, w in zip(row, widths)) for row in cells)
    return '\n'.join(lines)
