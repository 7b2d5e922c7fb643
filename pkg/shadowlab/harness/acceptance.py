"""Property suites run by `verify`, each reporting into the ledger."""

import hashlib
import logging
from math import factorial, pi
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from shadowlab.contact.characteristics import Ellipsoid, RadialHypersurface, ScaledBall, a_min_estimate
from shadowlab.contact.comparison import hausdorff_lipschitz_probe, projection_monotonicity
from shadowlab.contact.sphere_functions import (
    SphereFunction,
    fiber_rotate,
    monomial_basis,
    random_sphere_points,
    reeb_average,
)
from shadowlab.core.sampling import (
    j_invariant_pair,
    make_rng,
    random_frame,
    random_symplectic,
    random_symplectic_subspace,
)
from shadowlab.core.symplectic import (
    SymplecticSubspace,
    gram_volume,
    j_invariance_defect,
    linear_shadow_volume,
    omega_power,
    symplectic_projector,
)
from shadowlab.embeddings.composition import EmbeddingComposition, certify_domain_radius
from shadowlab.embeddings.polynomials import Polynomial
from shadowlab.embeddings.primitives import PrimitiveMap
from shadowlab.errors import NumericalError
from shadowlab.harness.dispatcher import ExperimentDispatcher
from shadowlab.harness.experiments import center_grid, scaling_identity
from shadowlab.harness.ledger import LedgerRecord, ResultLedger
from shadowlab.harness.scenario import Scenario, canonical_json, load_corpus

logger = logging.getLogger(__name__)

Suite = Callable[..., List[LedgerRecord]]


def _record(suite: str, params: Dict, quantity: str, value: float, margin: float, passed: bool,
            t_or_r: float = 0.0, error: float = 0.0) -> LedgerRecord:
    digest = hashlib.sha256(canonical_json({"suite": suite, **params}).encode("utf-8")).hexdigest()
    return LedgerRecord(
        scenario_id=f"verify/{suite}",
        scenario_hash=digest,
        quantity=quantity,
        t_or_r=float(t_or_r),
        value=float(value),
        error=float(error),
        margin=float(margin),
        passed=bool(passed),
    )


def _failure_record(scenario: Scenario) -> LedgerRecord:
    return LedgerRecord(
        scenario_id=scenario.scenario_id,
        scenario_hash=scenario.scenario_hash,
        quantity="numerical_failure",
        t_or_r=0.0,
        value=0.0,
        error=0.0,
        margin=0.0,
        passed=False,
    )


def linear_random_suite(seed: int, count: int = 1000, n: int = 3, k: int = 2) -> List[LedgerRecord]:
    """Linear non-squeezing on random symplectic maps and subspaces."""
    params = {"seed": seed, "count": count, "n": n, "k": k}
    rng = make_rng(seed, stream=101)
    ratios = np.empty(count)
    for i in tqdm(range(count), desc="Linear non-squeezing"):
        L = random_symplectic(n, rng)
        V = random_symplectic_subspace(n, k, rng)
        ratios[i] = linear_shadow_volume(L, V) / pi ** k
    worst = float(ratios.min())
    violations = int(np.sum(ratios < 1.0 - 1e-9))
    return [
        _record("linear", params, "min_ratio", worst, worst - 1.0, worst >= 1.0 - 1e-9),
        _record("linear", params, "violations", violations, -violations, violations == 0),
    ]


def equality_suite(seed: int, count: int = 20, n: int = 3, k: int = 2) -> List[LedgerRecord]:
    """J-invariant L^{-1} V gives exactly pi^k with vanishing defect."""
    params = {"seed": seed, "count": count, "n": n, "k": k}
    rng = make_rng(seed, stream=102)
    gaps, defects = [], []
    for _ in range(count):
        L, V = j_invariant_pair(n, k, rng)
        gaps.append(abs(linear_shadow_volume(L, V) - pi ** k))
        defects.append(j_invariance_defect(L, V))
    gap, defect = max(gaps), max(defects)
    return [
        _record("equality", params, "max_gap", gap, 1e-6 - gap, gap <= 1e-6),
        _record("equality", params, "max_defect", defect, 1e-8 - defect, defect <= 1e-8),
    ]


def wirtinger_suite(seed: int, count: int = 10_000) -> List[LedgerRecord]:
    """|omega^k / k!| never exceeds the Euclidean volume of the frame."""
    combos = [(1, 2), (1, 3), (2, 2), (2, 3)]
    params = {"seed": seed, "count": count}
    rng = make_rng(seed, stream=103)
    records = []
    for k, n in combos:
        per_combo = count // len(combos)
        excess = np.empty(per_combo)
        for i in range(per_combo):
            frame = random_frame(2 * n, 2 * k, rng)
            excess[i] = abs(omega_power(frame)) / factorial(k) - gram_volume(frame)
        worst = float(excess.max())
        records.append(
            _record("wirtinger", params, f"max_excess_k{k}_n{n}", worst, 1e-10 - worst, worst <= 1e-10)
        )
    return records


def capacity_anchor_suite(seed: int, radii: Sequence[float] = (0.7, 1.0, 1.3), workers: int = 1) -> List[LedgerRecord]:
    """Minimal action of round balls and of the (1, 2) ellipsoid."""
    params = {"seed": seed, "radii": list(radii)}
    records = []
    for radius in radii:
        value = a_min_estimate(ScaledBall(radius), workers=workers).value
        gap = abs(value - radius ** 2 * pi)
        records.append(_record("capacity", params, "ball", value, 1e-4 - gap, gap <= 1e-4, t_or_r=radius))
    value = a_min_estimate(Ellipsoid.from_semi_axes([1.0, 2.0]), workers=workers).value
    gap = abs(value - pi)
    records.append(_record("capacity", params, "ellipsoid_1_2", value, 1e-3 - gap, gap <= 1e-3))
    return records


def random_toric_body(rng: np.random.Generator, scale: float = 0.15) -> RadialHypersurface:
    """Radial lift of a random polynomial in |z1|^2 and |z2|^2, inside the (0.5, 2) pinch."""
    terms = {
        ((1, 0), (1, 0)): rng.uniform(-scale, scale),
        ((0, 1), (0, 1)): rng.uniform(-scale, scale),
        ((1, 1), (1, 1)): rng.uniform(-scale, scale),
        ((2, 0), (2, 0)): rng.uniform(-scale, scale),
    }
    return RadialHypersurface(SphereFunction.from_terms(terms, 2))


def projection_suite(seed: int, count: int = 20, workers: int = 1) -> List[LedgerRecord]:
    """c(P C) - c(C) >= 0 for random pinched convex bodies and P onto the (x1, y1) plane."""
    params = {"seed": seed, "count": count}
    rng = make_rng(seed, stream=104)
    P = symplectic_projector(SymplecticSubspace.coordinate(2, [0]))
    margins = []
    for _ in tqdm(range(count), desc="Projection monotonicity"):
        body = random_toric_body(rng)
        margins.append(projection_monotonicity(body, P, workers=workers).margin)
    worst = min(margins)
    return [_record("projection", params, "min_margin", worst, worst + 1e-3, worst >= -1e-3)]


def lipschitz_suite(seed: int, count: int = 20, workers: int = 1) -> List[LedgerRecord]:
    """Capacity differences over Hausdorff distances stay below the pinch constant."""
    params = {"seed": seed, "count": count}
    rng = make_rng(seed, stream=105)
    ratios, constant = [], None
    for _ in tqdm(range(count), desc="Lipschitz probe"):
        base = random_toric_body(rng, scale=0.12)
        bump = random_toric_body(rng, scale=0.03).f
        probe = hausdorff_lipschitz_probe(base, RadialHypersurface(base.f + bump), workers=workers)
        ratios.append(probe.ratio)
        constant = probe.constant
    worst = max(ratios)
    return [_record("lipschitz", params, "max_ratio", worst, constant - worst, worst <= constant)]


def averaging_suite(seed: int, count: int = 20, samples: int = 64) -> List[LedgerRecord]:
    """Reeb averaging preserves the mean, is idempotent and returns fiber-invariant functions."""
    params = {"seed": seed, "count": count}
    rng = make_rng(seed, stream=106)
    basis = list(monomial_basis(2, 4))
    thetas = 2.0 * np.pi * np.arange(32) / 32
    mean_gap = idempotence = invariance = numeric = 0.0
    for _ in range(count):
        coefficients = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        f = SphereFunction.from_terms(dict(zip(basis, coefficients)), 2)
        avg = reeb_average(f)
        X = random_sphere_points(2, samples, rng)
        mean_gap = max(mean_gap, abs(avg.mean() - f.mean()))
        idempotence = max(idempotence, float(np.max(np.abs(reeb_average(avg)(X) - avg(X)))))
        invariance = max(invariance, float(np.max(np.abs(avg(fiber_rotate(X, 0.7)) - avg(X)))))
        fiber_mean = np.mean([f(fiber_rotate(X, theta)) for theta in thetas], axis=0)
        numeric = max(numeric, float(np.max(np.abs(fiber_mean - avg(X)))))
    return [
        _record("averaging", params, "mean_gap", mean_gap, 1e-10 - mean_gap, mean_gap <= 1e-10),
        _record("averaging", params, "idempotence", idempotence, 1e-10 - idempotence, idempotence <= 1e-10),
        _record("averaging", params, "invariance", invariance, 1e-10 - invariance, invariance <= 1e-10),
        _record("averaging", params, "fiber_mean", numeric, 1e-10 - numeric, numeric <= 1e-10),
    ]


def cubic_shear(dim: int = 4, domain_radius: float = 1.5) -> EmbeddingComposition:
    """A linear shear followed by a cubic position shear."""
    n = dim // 2
    quadratic = Polynomial.from_terms({(1, 1) + (0,) * (n - 2): 0.3}, n)
    cubic = Polynomial.from_terms({(3,) + (0,) * (n - 1): 0.04, (1, 2) + (0,) * (n - 2): 0.02}, n)
    phi = EmbeddingComposition([PrimitiveMap.shear_positions(quadratic), PrimitiveMap.shear_positions(cubic)])
    return phi.with_domain_radius(min(domain_radius, certify_domain_radius(phi)))


def scaling_suite(seed: int, workers: int = 1, order: int = 24) -> List[LedgerRecord]:
    """Vol(P phi(B_r(x))) = r^{2k} Vol(P phi_{r,x}(B_1)) to 1% of r^{2k} pi^k at five (x, r) pairs."""
    params = {"seed": seed, "order": order}
    phi = cubic_shear()
    P = symplectic_projector(SymplecticSubspace.coordinate(2, [0]))
    centers = center_grid(phi.dim, 3, 0.5, 3)
    pairs = [(centers[0], 0.1), (centers[4], 0.2), (centers[13], 0.2), (centers[22], 0.1), (centers[26], 0.2)]
    records = []
    for index, (center, r) in enumerate(pairs):
        check = scaling_identity(phi, P, center, r, order, workers, {"seed": seed})
        bound = 0.01 * r ** (2 * check.k) * pi ** check.k
        records.append(
            _record("scaling", params, f"pair{index}", check.direct, bound - check.defect, check.passed, t_or_r=r,
                    error=check.defect)
        )
    return records


SUITES: Dict[str, Suite] = {
    "linear": linear_random_suite,
    "equality": equality_suite,
    "wirtinger": wirtinger_suite,
    "capacity": capacity_anchor_suite,
    "projection": projection_suite,
    "lipschitz": lipschitz_suite,
    "averaging": averaging_suite,
    "scaling": scaling_suite,
}

# Suites repeated to confirm the ledger is reproduced bit for bit; capacity fans out over worker threads
DETERMINISM_SUITES = ("linear", "wirtinger", "averaging", "capacity")


def _run_suite(name: str, seed: int, workers: int) -> List[LedgerRecord]:
    suite = SUITES[name]
    if name in ("capacity", "projection", "lipschitz", "scaling"):
        return suite(seed, workers=workers)
    return suite(seed)


def determinism_check(seed: int, names: Sequence[str] = DETERMINISM_SUITES, workers: int = 1) -> List[LedgerRecord]:
    """Run the named suites on one worker, then on several, and compare ledger digests."""
    many = max(2, workers)
    first = ResultLedger(r for name in names for r in _run_suite(name, seed, 1))
    second = ResultLedger(r for name in names for r in _run_suite(name, seed, many))
    same = first.digest() == second.digest()
    params = {"seed": seed, "suites": list(names), "workers": [1, many]}
    return [_record("determinism", params, "digest_match", float(same), 0.0, same)]


def run_verify(
    corpus: Optional[Union[str, Path]],
    seed: int,
    workers: int = 1,
    dispatcher: Optional[ExperimentDispatcher] = None,
    suites: Optional[Sequence[str]] = None,
    defaults: Optional[Dict] = None,
    overrides: Optional[Dict] = None,
) -> ResultLedger:
    """The scenario corpus followed by the property suites, all in one ledger.

    A scenario or suite that fails numerically is logged and recorded as failed; the rest still run.
    """
    dispatcher = dispatcher if dispatcher is not None else ExperimentDispatcher()
    if corpus is not None:
        scenarios = load_corpus(corpus, defaults)
        for scenario in tqdm(scenarios, desc="Scenario corpus"):
            scenario = scenario.with_overrides(overrides or {})
            try:
                dispatcher.dispatch(scenario, workers)
            except NumericalError as e:
                logger.error(f"Scenario {scenario.scenario_id} failed numerically: {e}")
                dispatcher.ledger.append(_failure_record(scenario))
    for name in suites if suites is not None else list(SUITES) + ["determinism"]:
        try:
            if name == "determinism":
                records = determinism_check(seed, workers=workers)
            else:
                records = _run_suite(name, seed, workers)
        except NumericalError as e:
            logger.error(f"Suite {name} failed numerically: {e}")
            records = [_record(name, {"seed": seed}, "numerical_failure", 0.0, 0.0, False)]
        dispatcher.ledger.extend(records)
        logger.info(f"Suite {name}: {sum(r.passed for r in records)}/{len(records)} records pass")
    return dispatcher.ledger
