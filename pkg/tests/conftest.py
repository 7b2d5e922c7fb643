"""Shared fixtures for the shadowlab test suite."""

import json

import numpy as np
import pytest

from shadowlab.config import SCENARIO_SCHEMA
from shadowlab.core.sampling import make_rng
from shadowlab.core.symplectic import SymplecticSubspace, symplectic_projector
from shadowlab.embeddings.composition import EmbeddingComposition
from shadowlab.embeddings.path import AnalyticPath, PathFactor
from shadowlab.embeddings.polynomials import Polynomial


@pytest.fixture
def rng():
    """Deterministic Philox generator."""
    return make_rng(1234, stream=0)


@pytest.fixture
def plane_projector_r4():
    """Projector of R^4 onto the (x1, y1) plane."""
    return symplectic_projector(SymplecticSubspace.coordinate(2, [0]))


@pytest.fixture
def planes_projector_r6():
    """Projector of R^6 onto the (x1, y1, x2, y2) subspace."""
    return symplectic_projector(SymplecticSubspace.coordinate(3, [0, 1]))


@pytest.fixture
def position_shear_r4():
    """(x, y) -> (x, y + S x) with S = [[0.4, 0.2], [0.2, 0.3]]."""
    L = np.eye(4)
    L[1, 0], L[1, 2], L[3, 0], L[3, 2] = 0.4, 0.2, 0.2, 0.3
    return L


@pytest.fixture
def shear_path_r6():
    """t -> (x, y + t grad g(x)) with g = 0.5 x1 x2 + 0.3 x1^3."""
    g = Polynomial.from_terms({(1, 1, 0): 0.5, (3, 0, 0): 0.3}, 3)
    return AnalyticPath([PathFactor("shear_positions", 6, potentials=[Polynomial.zero(3), g])])


@pytest.fixture
def cubic_embedding_r4():
    """Linear shear followed by a cubic shear, certified on B_1.5."""
    data = {
        "domain_radius": 1.5,
        "factors": [
            {"kind": "shear_positions", "potential": {"terms": [{"powers": [1, 1], "coeff": 0.3}]}},
            {
                "kind": "shear_positions",
                "potential": {"terms": [{"powers": [3, 0], "coeff": 0.04}, {"powers": [1, 2], "coeff": 0.02}]},
            },
        ],
    }
    return EmbeddingComposition.from_dict(data, 4)


@pytest.fixture
def linear_document():
    """Minimal linear-shadow scenario on R^4."""
    return {
        "schema": SCENARIO_SCHEMA,
        "id": "doc-linear",
        "kind": "linear-shadow",
        "dimension": 4,
        "subspace": {"pairs": [0]},
        "embedding": {"factors": [{"kind": "linear", "matrix": np.eye(4).tolist()}]},
    }


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario document to a JSON file and return its path."""

    def _write(document, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return _write
