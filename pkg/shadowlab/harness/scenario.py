"""Scenario files: versioned JSON describing one experiment."""

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from shadowlab.config import SCENARIO_SCHEMA, merged
from shadowlab.contact.characteristics import (
    ContactSphere,
    ConvexBody,
    Ellipsoid,
    RadialHypersurface,
    ScaledBall,
)
from shadowlab.contact.normal_form import ContactMultiplier
from shadowlab.contact.sphere_functions import SphereFunction
from shadowlab.core.symplectic import SymplecticSubspace
from shadowlab.definitions import RUNNER_SYSTEM_CONFIG, ExperimentKind
from shadowlab.embeddings.composition import EmbeddingComposition
from shadowlab.embeddings.path import AnalyticPath
from shadowlab.errors import ScenarioError, ValidationError
from shadowlab.shadow.quadrature import sphere_rule

logger = logging.getLogger(__name__)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _parse_subspace(data: Dict[str, Any], dimension: int) -> SymplecticSubspace:
    if "pairs" in data:
        return SymplecticSubspace.coordinate(dimension // 2, data["pairs"])
    basis = np.array(data["basis"], dtype=float)
    if basis.ndim != 2 or basis.shape[1] != dimension:
        raise ScenarioError(f"Subspace basis vectors must have length {dimension}")
    return SymplecticSubspace(basis.T)


def build_body(data: Dict[str, Any], dimension: int):
    """Convex body (or contact sphere) from its scenario description."""
    kind = data.get("kind")
    if kind == "ball":
        return ScaledBall(float(data.get("radius", 1.0)), dimension)
    if kind == "ellipsoid":
        if "semi_axes" in data:
            return Ellipsoid.from_semi_axes(data["semi_axes"])
        return Ellipsoid(np.array(data["matrix"], dtype=float))
    if kind == "radial":
        return RadialHypersurface(SphereFunction.from_dict(data["f"], dimension // 2))
    if kind == "contact-sphere":
        return ContactSphere(SphereFunction.from_dict(data["rho"], dimension // 2))
    raise ScenarioError(f"Unknown body kind: {kind!r}")


def _check_positive_tolerances(parameters: Dict[str, Any], source: str):
    for key, value in parameters.items():
        if "tol" in key and not (isinstance(value, (int, float)) and value > 0):
            raise ScenarioError(f"{source}: tolerance {key} must be positive, got {value!r}")


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated scenario; `document` is the parsed JSON the hash is taken over."""

    scenario_id: str
    kind: ExperimentKind
    dimension: int
    document: Dict[str, Any]
    parameters: Dict[str, Any]
    subspace: Optional[SymplecticSubspace] = None
    embedding: Optional[EmbeddingComposition] = None
    path: Optional[AnalyticPath] = None
    body: Optional[Any] = None
    other_body: Optional[ConvexBody] = None
    multiplier: Optional[ContactMultiplier] = None
    expected: Optional[float] = None
    source: str = field(default="<memory>", compare=False)

    @property
    def scenario_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.document).encode("utf-8")).hexdigest()

    @property
    def seed(self) -> int:
        return int(self.parameters["seed"])

    def with_overrides(self, overrides: Dict[str, Any]) -> "Scenario":
        """Apply non-None parameter overrides; the hash follows the new parameters."""
        parameters = merged(self.parameters, overrides)
        if parameters == self.parameters:
            return self
        _check_positive_tolerances(parameters, self.source)
        document = dict(self.document)
        document["parameters"] = parameters
        return replace(self, parameters=parameters, document=document)


def parse_scenario(
    data: Dict[str, Any], source: str = "<memory>", defaults: Optional[Dict[str, Any]] = None
) -> Scenario:
    """Validate a scenario document and build its mathematical objects.

    Args:
        data: Parsed JSON document
        source: Name used in error messages
        defaults: Runtime defaults (seed, workers) below the scenario's own parameters

    Returns:
        Scenario: The validated scenario

    Raises:
        ScenarioError: For any schema, tolerance or dimension problem
    """
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: scenario must be a JSON object")
    if data.get("schema") != SCENARIO_SCHEMA:
        raise ScenarioError(f"{source}: expected schema {SCENARIO_SCHEMA!r}, got {data.get('schema')!r}")
    try:
        kind = ExperimentKind(data.get("kind"))
    except ValueError as e:
        raise ScenarioError(f"{source}: unknown experiment kind {data.get('kind')!r}") from e
    config = RUNNER_SYSTEM_CONFIG[kind]

    missing = [name for name in config.requires if name not in data and not (name == "path" and "embedding" in data)]
    if missing:
        raise ScenarioError(f"{source}: {kind.value} scenario needs {', '.join(missing)}")

    dimension = data.get("dimension")
    if not isinstance(dimension, int) or dimension < 2 or dimension % 2:
        raise ScenarioError(f"{source}: dimension must be a positive even integer, got {dimension!r}")

    parameters = merged(merged(config.parameters, defaults), data.get("parameters", {}))
    parameters.setdefault("seed", 0)
    parameters.setdefault("cross_check", config.cross_check)
    _check_positive_tolerances(parameters, source)
    for grid in ("t_grid", "r_grid"):
        values = parameters.get(grid)
        if values is not None and (not values or any(b <= a for a, b in zip(values, values[1:]))):
            raise ScenarioError(f"{source}: {grid} must be a non-empty increasing list")
    if any(t < 0 for t in parameters.get("t_grid", [])) and kind is not ExperimentKind.DEFORM_ANALYZE:
        raise ScenarioError(f"{source}: path parameters start at t = 0")
    if any(r <= 0 for r in parameters.get("r_grid", [1.0])):
        raise ScenarioError(f"{source}: r_grid values must be positive")

    try:
        subspace = _parse_subspace(data["subspace"], dimension) if "subspace" in data else None
        embedding = EmbeddingComposition.from_dict(data["embedding"], dimension) if "embedding" in data else None
        path = AnalyticPath.from_dict(data["path"], dimension) if "path" in data else None
        body = build_body(data["body"], dimension) if "body" in data else None
        other = build_body(data["other_body"], dimension) if "other_body" in data else None
        multiplier = ContactMultiplier.from_dict(data["multiplier"], dimension // 2) if "multiplier" in data else None
    except ValidationError:
        raise
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise ScenarioError(f"{source}: malformed scenario ({type(e).__name__}: {e})") from e

    if subspace is not None:
        if subspace.ambient_dim != dimension:
            raise ScenarioError(f"{source}: subspace lives in R^{subspace.ambient_dim}, not R^{dimension}")
        order = parameters.get("quadrature_order")
        if order is not None:
            try:
                sphere_rule(subspace.k, int(order))
            except ValidationError as e:
                raise ScenarioError(f"{source}: {e}") from e

    scenario = Scenario(
        scenario_id=str(data.get("id", Path(source).stem)),
        kind=kind,
        dimension=dimension,
        document=data,
        parameters=parameters,
        subspace=subspace,
        embedding=embedding,
        path=path,
        body=body,
        other_body=other,
        multiplier=multiplier,
        expected=data.get("expected"),
        source=source,
    )
    logger.debug(f"Parsed scenario {scenario.scenario_id} ({kind.value}), hash {scenario.scenario_hash[:12]}")
    return scenario


def load_scenario(path: Union[str, Path], defaults: Optional[Dict[str, Any]] = None) -> Scenario:
    """Read and validate a UTF-8 JSON scenario file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: invalid JSON ({e})") from e
    return parse_scenario(data, str(path), defaults)


def load_corpus(directory: Union[str, Path], defaults: Optional[Dict[str, Any]] = None):
    """All scenarios of a directory, in file-name order."""
    return [load_scenario(p, defaults) for p in sorted(Path(directory).glob("*.json"))]
