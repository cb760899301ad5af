from concurrent.futures import ThreadPoolExecutor
from typing import List, Mapping, Optional, Sequence, Union

import numpy as np

from ..exceptions import (
    MultiSegmentUnsupported, InteriorUnsupported, DegenerateAttractiveness, NoValidReference,
    NotDegenerate, OutsideFamilyDomain, DenominatorNonpositive, NoInteriorCandidate,
)
from ..utils.logger import get_logger
from .constant import (
    REFERENCE_TOL, REFERENCE_RTOL, DENOMINATOR_TOL, INTERIOR_MARGIN, DEDUP_RADIUS, DEFAULT_TOL, DEFAULT_STARTS,
    DEFAULT_MAX_ITER, DEFAULT_SEED, GAUSS_SEIDEL_SWEEPS, NORMALIZATION_TOL,
    DISCRIMINANT_TOL,
)
from .game import Game, StrategyProfile


class FirmFamily(object):
    '''Line sigma_is = a_is + b_is * tau_i through firm i's simplex (segment 1).

    Arrays are aligned with `catalog`; `reference` is the global index t*
    whose mass is tau_i. A pinned family has b = 0: the firm's stationary
    point does not move with tau_i.
    '''
    def __init__(self, firm, catalog, reference, E, B, a, b, pinned=False):
        self.firm = firm
        self.catalog = catalog
        self.reference = reference
        self.E = E
        self.B = B
        self.a = a
        self.b = b
        self.pinned = pinned

    def __repr__(self):
        kind = 'pinned' if self.pinned else f'reference={self.reference}'
        return f'FirmFamily(firm={self.firm}, {kind})'

    def point(self, tau: float) -> np.ndarray:
        return self.a + self.b * tau

    @property
    def reference_position(self) -> int:
        return int(np.flatnonzero(self.catalog == self.reference)[0])


class InteriorConstants(object):
    '''Per-firm families plus the market aggregates a and b_r of the single-segment reduction'''
    def __init__(self, families: Sequence[FirmFamily], a_total: float, b_firm: np.ndarray, n_products: int):
        self.families = tuple(families)
        self.a_total = a_total
        self.b_firm = b_firm
        self.n_products = n_products

    def __repr__(self):
        return f'InteriorConstants(a={self.a_total:.6g}, b={np.round(self.b_firm, 6).tolist()})'

    @property
    def pinned(self) -> np.ndarray:
        return np.array([family.pinned for family in self.families])

    def embedded(self, name: str) -> np.ndarray:
        '''a or b coefficients laid out over the global product enumeration, shape (n, rho)'''
        out = np.zeros((len(self.families), self.n_products))
        for i, family in enumerate(self.families):
            out[i, family.catalog] = getattr(family, name)
        return out


class StationaryCandidate(object):
    '''Root of the stationarity system with its reconstruction and diagnostics'''
    def __init__(self, tau, profile, residual, curvature, interior, references, converged=True):
        self.tau = tau
        self.references = references
        self.profile = profile
        self.residual = residual
        self.curvature = curvature
        self.interior = interior
        self.converged = converged

    def __repr__(self):
        return f'StationaryCandidate(tau={np.round(self.tau, 8).tolist()}, interior={self.interior})'

    @property
    def second_order(self) -> List[Optional[str]]:
        '''Per firm: "max" when v_i is locally concave in tau_i, "min" when convex, None when pinned'''
        labels = []
        for c in self.curvature:
            if np.isnan(c):
                labels.append(None)
            else:
                labels.append('max' if c < 0 else 'min' if c > 0 else 'flat')
        return labels


def _segment_one(game: Game, firm: int):
    catalog = game.catalogs[firm]
    return catalog, game.price[firm, 0, catalog], game.attractiveness[firm, 0, catalog]


def all_equal(values) -> bool:
    return float(np.ptp(values)) <= 1e-12 * float(np.max(np.abs(values)))


def reference_floor(beta) -> float:
    return max(REFERENCE_TOL, REFERENCE_RTOL * float(np.sum(1.0 / beta)))


def _require_single_segment(game: Game):
    if game.n_segments != 1:
        raise MultiSegmentUnsupported(
            f'the closed-form interior reduction needs a single segment, scenario has {game.n_segments}')


def solve_equal_attractiveness(game: Game, firm: int) -> FirmFamily:
    '''Stationary point of a firm whose products are equally attractive: beta_s * sigma_s constant'''
    _require_single_segment(game)
    catalog, beta, e = _segment_one(game, firm)
    if not all_equal(e):
        raise NotDegenerate(f"firm '{game.firm_ids[firm]}': attractiveness is not constant over its catalog")
    sigma = (1.0 / beta) / np.sum(1.0 / beta)
    c = np.sum(1.0 / (beta * e))
    return FirmFamily(firm, catalog, int(catalog[0]), E=np.zeros(len(catalog)), B=beta * e * c,
                      a=sigma, b=np.zeros(len(catalog)), pinned=True)


def affine_coefficients(beta, e, pos: Optional[int] = None):
    '''E, B and the family coefficients (a, b) of one catalog, reference at position pos.

    E_t = sum_p (e_p - e_t) / (beta_p e_p) and B_t = beta_t e_t sum_p 1 / (beta_p e_p);
    pos defaults to the largest |E_t|. a and b are None when E_pos is numerically zero, that is below
    REFERENCE_TOL or below REFERENCE_RTOL * sum_p 1 / beta_p, where cancellation swamps it.
    '''
    c = np.sum(1.0 / (beta * e))
    t = np.sum(1.0 / beta)
    E = t - e * c
    B = beta * e * c
    if pos is None:
        pos = int(np.argmax(np.abs(E)))
    if abs(E[pos]) < reference_floor(beta):
        return E, B, None, None, pos
    a = (E[pos] - E) / (E[pos] * B)
    b = E * B[pos] / (E[pos] * B)
    a[pos], b[pos] = 0.0, 1.0
    return E, B, a, b, pos


def stationary_quadratic(w, a, b, e, others: float):
    '''Coefficients (q2, q1, q0) of F(tau) for one family facing constant extra mass.

    The denominator is d0 + b_i tau with d0 = sum e a + others
    and b_i = sum e b.
    '''
    A2, A1, A0 = np.sum(w * b ** 2), np.sum(w * a * b), np.sum(w * a ** 2)
    d0 = float(np.dot(e, a)) + others
    b_i = float(np.dot(e, b))
    return A2 * b_i, 2 * A2 * d0, 2 * A1 * d0 - b_i * A0


def _firm_family(game: Game, firm: int, reference: Optional[int] = None) -> FirmFamily:
    catalog, beta, e = _segment_one(game, firm)
    firm_id = game.firm_ids[firm]
    if all_equal(e):
        raise DegenerateAttractiveness(
            f"firm '{firm_id}': all products are equally attractive; use solve_equal_attractiveness")
    pos = None
    if reference is not None:
        hits = np.flatnonzero(catalog == reference)
        if not len(hits):
            raise NoValidReference(f"firm '{firm_id}': reference product {reference} is not in its catalog")
        pos = int(hits[0])
    E, B, a, b, pos = affine_coefficients(beta, e, pos)
    if a is None:
        raise NoValidReference(f"firm '{firm_id}': no reference product with E_it away from zero")
    return FirmFamily(firm, catalog, int(catalog[pos]), E, B, a, b)


def compute_interior_constants(game: Game, reference: Union[None, Mapping[int, int], Sequence] = None,
                               allow_degenerate: bool = False) -> InteriorConstants:
    '''E_it, B_it, a_is, b_is per firm and the aggregates a, b_r (single segment only)'''
    _require_single_segment(game)
    for i in range(game.n_firms):
        if len(game.catalogs[i]) < 2:
            raise InteriorUnsupported(
                f"interior analysis needs at least two catalog products per firm; firm '{game.firm_ids[i]}' has {len(game.catalogs[i])}")

    families = []
    for i in range(game.n_firms):
        ref = None
        if isinstance(reference, Mapping):
            ref = reference.get(i)
        elif reference is not None:
            ref = reference[i]
        _, _, e = _segment_one(game, i)
        if allow_degenerate and all_equal(e):
            families.append(solve_equal_attractiveness(game, i))
        else:
            families.append(_firm_family(game, i, ref))

    e1 = [game.attractiveness[f.firm, 0, f.catalog] for f in families]
    a_total = float(sum(np.dot(f.a, e) for f, e in zip(families, e1)))
    b_firm = np.array([np.dot(f.b, e) for f, e in zip(families, e1)])
    return InteriorConstants(families, a_total, b_firm, game.n_products)


def family_interval(constants: InteriorConstants, firm: int, margin: float = 0.0):
    '''Range of tau_i keeping every reconstructed on-catalog mass in [margin, 1 - margin]'''
    family = constants.families[firm]
    if family.pinned:
        tau = float(family.a[0])
        inside = np.all((family.a >= margin) & (family.a <= 1.0 - margin))
        return (tau, tau) if inside else (1.0, 0.0)
    lo, hi = -np.inf, np.inf
    for a, b in zip(family.a, family.b):
        if b > 0:
            lo, hi = max(lo, (margin - a) / b), min(hi, (1.0 - margin - a) / b)
        elif b < 0:
            lo, hi = max(lo, (1.0 - margin - a) / b), min(hi, (margin - a) / b)
        elif not margin <= a <= 1.0 - margin:
            return 1.0, 0.0
    return float(lo), float(hi)


def reconstruct(constants: InteriorConstants, tau) -> np.ndarray:
    '''Embedded sigma for a vector of reference masses (no validation)'''
    sigma = np.zeros((len(constants.families), constants.n_products))
    for i, family in enumerate(constants.families):
        sigma[i, family.catalog] = family.point(tau[i])
    return sigma


def _weights(game: Game, family: FirmFamily) -> np.ndarray:
    return game.price[family.firm, 0, family.catalog] * game.demand[0] * game.attractiveness[family.firm, 0, family.catalog]


def _coefficients(game: Game, constants: InteriorConstants):
    '''Per firm (A2, A1, A0): the reduced numerator is A2 tau^2 + 2 A1 tau + A0'''
    out = np.zeros((len(constants.families), 3))
    for i, family in enumerate(constants.families):
        w = _weights(game, family)
        out[i] = (np.sum(w * family.b ** 2), np.sum(w * family.a * family.b), np.sum(w * family.a ** 2))
    return out


def _denominator(constants: InteriorConstants, tau) -> float:
    return constants.a_total + float(np.dot(constants.b_firm, tau))


def _residual(coefficients, constants: InteriorConstants, tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    A2, A1, A0 = coefficients.T
    numerator = A2 * tau ** 2 + 2 * A1 * tau + A0
    slope = 2 * (A2 * tau + A1)
    residual = slope * _denominator(constants, tau) - constants.b_firm * numerator
    residual[constants.pinned] = 0.0
    return residual


def _jacobian(coefficients, constants: InteriorConstants, tau) -> np.ndarray:
    A2, A1, _ = coefficients.T
    slope = 2 * (A2 * tau + A1)
    jacobian = np.outer(slope, constants.b_firm)
    np.fill_diagonal(jacobian, 2 * A2 * _denominator(constants, tau))
    return jacobian


def _check_domain(constants: InteriorConstants, tau):
    tau = np.asarray(tau, dtype=float)
    for i, family in enumerate(constants.families):
        point = family.point(tau[i])
        if np.any(point <= 0.0) or np.any(point >= 1.0):
            raise OutsideFamilyDomain(f'tau[{i}] = {tau[i]!r} reconstructs masses outside (0, 1)')
    denominator = _denominator(constants, tau)
    if denominator <= DENOMINATOR_TOL:
        raise DenominatorNonpositive(f'a + sum b_r tau_r = {denominator!r} is not positive')
    return tau, denominator


def restricted_payoff_v(constants: InteriorConstants, game: Game, tau, firm: int) -> float:
    '''v_i(tau): firm i's payoff when every firm plays its family point'''
    tau, denominator = _check_domain(constants, tau)
    family = constants.families[firm]
    return float(np.sum(_weights(game, family) * family.point(tau[firm]) ** 2) / denominator)


def stationarity_residual(constants: InteriorConstants, game: Game, tau) -> np.ndarray:
    '''F_i(tau): numerator of dv_i/dtau_i; zero for pinned firms'''
    tau, _ = _check_domain(constants, tau)
    return _residual(_coefficients(game, constants), constants, tau)


def k_values(constants: InteriorConstants, game: Game, profile: StrategyProfile, firm: int):
    '''(1 - sigma_it B_it) / E_it for every usable t, and sum_p beta e sigma^2 / (2D)'''
    family = constants.families[firm]
    sigma = profile.sigma[firm, family.catalog]
    beta = game.price[firm, 0, family.catalog]
    usable = np.abs(family.E) > reference_floor(beta)
    from_family = (1.0 - sigma[usable] * family.B[usable]) / family.E[usable]
    e = game.attractiveness[firm, 0, family.catalog]
    denominator = float(np.sum(game.attractiveness[:, 0, :] * profile.sigma))
    return from_family, float(np.sum(beta * e * sigma ** 2) / (2.0 * denominator))


def interval_roots(q2, q1, q0, lo, hi) -> List[float]:
    '''Real roots of q2 x^2 + q1 x + q0 strictly inside (lo, hi), ascending.

    A discriminant within DISCRIMINANT_TOL * q1^2 below zero is a double root lost to rounding.
    '''
    if abs(q2) > 1e-300:
        disc = q1 * q1 - 4.0 * q2 * q0
        if disc < -DISCRIMINANT_TOL * q1 * q1:
            return []
        if disc <= 0.0:
            roots = [-q1 / (2.0 * q2)]
        else:
            half = -0.5 * (q1 + np.copysign(np.sqrt(disc), q1))
            roots = sorted({half / q2, q0 / half})
    elif abs(q1) > 1e-300:
        roots = [-q0 / q1]
    else:
        return []
    return [float(r) for r in roots if lo < r < hi]


def _run_start(game, constants, coefficients, tau, bounds, threshold, max_iter):
    '''Gauss-Seidel sweeps on the per-firm quadratics, then Newton polish; returns (tau, reason)'''
    active = np.flatnonzero(~constants.pinned)
    A2, A1, A0 = coefficients.T
    for _ in range(GAUSS_SEIDEL_SWEEPS):
        moved = 0.0
        for i in active:
            d0 = _denominator(constants, tau) - constants.b_firm[i] * tau[i]
            q2, q1, q0 = A2[i] * constants.b_firm[i], 2 * A2[i] * d0, 2 * A1[i] * d0 - constants.b_firm[i] * A0[i]
            roots = interval_roots(q2, q1, q0, *bounds[i])
            if not roots:
                return tau, 'left the interior'
            values = []
            for root in roots:
                trial = np.array(tau)
                trial[i] = root
                values.append(np.sum(_weights(game, constants.families[i]) * constants.families[i].point(root) ** 2)
                              / _denominator(constants, trial))
            best = roots[int(np.argmax(values))]
            moved = max(moved, abs(best - tau[i]))
            tau[i] = best
        if moved <= 1e-14:
            break

    for _ in range(max_iter):
        residual = _residual(coefficients, constants, tau)
        if np.max(np.abs(residual), initial=0.0) <= threshold:
            return tau, 'converged'
        jacobian = _jacobian(coefficients, constants, tau)[np.ix_(active, active)]
        try:
            step = np.linalg.solve(jacobian, residual[active])
        except np.linalg.LinAlgError:
            return tau, 'singular jacobian'
        tau[active] -= step
        if _denominator(constants, tau) <= DENOMINATOR_TOL:
            return tau, 'denominator vanished'
    residual = _residual(coefficients, constants, tau)
    if np.max(np.abs(residual), initial=0.0) <= threshold:
        return tau, 'converged'
    return tau, 'no convergence'


def _candidate(game, constants, coefficients, tau) -> Optional[StationaryCandidate]:
    sigma = reconstruct(constants, tau)
    if np.any(sigma < -1e-12) or np.any(sigma > 1.0 + 1e-12):
        return None
    sigma = np.where(game.offered, np.clip(sigma, 0.0, 1.0), 0.0)
    totals = sigma.sum(axis=1)
    drift = float(np.max(np.abs(totals - 1.0)))
    if drift > NORMALIZATION_TOL:
        get_logger('interior').log_event('renormalized candidate', drift=drift, tau=tau)
    profile = StrategyProfile(sigma / totals[:, None])
    on_catalog = profile.sigma[game.offered]
    interior = bool(np.all((on_catalog > INTERIOR_MARGIN) & (on_catalog < 1.0 - INTERIOR_MARGIN)))
    A2, A1, _ = coefficients.T
    denominator = _denominator(constants, tau)
    d0 = denominator - constants.b_firm * tau
    slope = 2 * A2 * constants.b_firm * tau + 2 * A2 * d0
    curvature = slope / denominator ** 2
    curvature[constants.pinned] = np.nan
    residual = np.abs(_residual(coefficients, constants, tau))
    references = [family.reference for family in constants.families]
    return StationaryCandidate(np.array(tau), profile, residual, curvature, interior, references)


def _deduplicate(candidates: List[StationaryCandidate]) -> List[StationaryCandidate]:
    kept = []
    for candidate in sorted(candidates, key=lambda c: tuple(c.tau)):
        if all(np.max(np.abs(candidate.tau - other.tau)) > DEDUP_RADIUS for other in kept):
            kept.append(candidate)
    return kept


def solve_interior(game: Game, seed: int = DEFAULT_SEED, starts: int = DEFAULT_STARTS, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER, workers: int = 1) -> List[StationaryCandidate]:
    '''Stationary points of the reduced single-segment game from deterministic multi-starts.

    Candidates are annotated, never certified: interior stationary points of
    this payoff can be minima, the verifier decides.
    '''
    logger = get_logger('interior')
    constants = compute_interior_constants(game, allow_degenerate=True)
    coefficients = _coefficients(game, constants)
    bounds = [family_interval(constants, i, INTERIOR_MARGIN) for i in range(game.n_firms)]
    for i, (lo, hi) in enumerate(bounds):
        if not constants.families[i].pinned and not lo < hi:
            raise NoInteriorCandidate(f"firm '{game.firm_ids[i]}' has no interior point on its stationary family")

    scale = game.demand[0] * game.price[:, 0, :].max() * game.attractiveness[:, 0, :].max()
    threshold = tol * scale
    rng = np.random.default_rng(seed)
    initial = []
    for _ in range(starts):
        tau = np.array([rng.uniform(lo, hi) if lo < hi else lo for lo, hi in bounds])
        initial.append(tau)

    def run(index_tau):
        index, tau = index_tau
        tau, reason = _run_start(game, constants, coefficients, np.array(tau), bounds, threshold, max_iter)
        logger.log_event('interior start', start=index, reason=reason, tau=tau)
        return tau, reason

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            roots = list(pool.map(run, enumerate(initial)))
    else:
        roots = [run(item) for item in enumerate(initial)]

    stalled = sum(reason == 'no convergence' for _, reason in roots)
    if stalled:
        logger.warning(f'{stalled} of {starts} starts stopped before the Newton polish reached tolerance')
    candidates = []
    for tau, reason in roots:
        if reason != 'converged':
            continue
        candidate = _candidate(game, constants, coefficients, tau)
        if candidate is not None:
            candidates.append(candidate)
    candidates = _deduplicate(candidates)
    logger.log_event('interior solve', starts=starts, candidates=len(candidates),
                     interior=sum(c.interior for c in candidates))
    if not any(c.interior for c in candidates):
        raise NoInteriorCandidate('no start reached an interior stationary point', candidates)
    return candidates
