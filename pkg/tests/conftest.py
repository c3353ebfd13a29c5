from dataclasses import dataclass
from pathlib import Path

import pytest

from urdfplus.graphs import build_pipeline
from urdfplus.model import NumberedModel, RobotModel, regular_numbering
from urdfplus.xmlio import parse_file

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"
PLAIN_DIR = MODELS_DIR / "plain"
ERRORS_DIR = MODELS_DIR / "errors"


@dataclass
class Pipeline:
    path: Path
    model: RobotModel
    numbered: NumberedModel
    graph: object
    digraph: object
    sccs: list
    lacg: object


def load_pipeline(name: str) -> Pipeline:
    path = MODELS_DIR / name
    model = parse_file(path).model
    numbered = regular_numbering(model)
    graph, digraph, sccs, lacg = build_pipeline(numbered)
    return Pipeline(path, model, numbered, graph, digraph, sccs, lacg)


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS_DIR


@pytest.fixture(scope="session")
def plain_paths() -> list[Path]:
    return sorted(PLAIN_DIR.glob("*.urdf"))


@pytest.fixture(scope="session")
def wrist() -> Pipeline:
    return load_pipeline("wrist.urdf")


@pytest.fixture(scope="session")
def belt() -> Pipeline:
    return load_pipeline("belt.urdf")


@pytest.fixture(scope="session")
def fourbar() -> Pipeline:
    return load_pipeline("fourbar.urdf")


@pytest.fixture(scope="session")
def nested() -> Pipeline:
    return load_pipeline("nested.urdf")


@pytest.fixture(scope="session")
def overlapping() -> Pipeline:
    return load_pipeline("overlapping.urdf")
