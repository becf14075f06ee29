import pathlib

import pytest

from pmdpsynth import parse_model, parse_spec

ROOT = pathlib.Path(__file__).resolve().parents[1]

FIG1_TEXT = (ROOT / "models" / "fig1.pmc").read_text()


@pytest.fixture(scope="session")
def fig1():
    """Five-state single-parameter chain: reach probability v^2 (1 - v)."""
    return parse_model(FIG1_TEXT)


@pytest.fixture(scope="session")
def fig1_text():
    return FIG1_TEXT


@pytest.fixture
def spec_03():
    return parse_spec("P<=0.3")
