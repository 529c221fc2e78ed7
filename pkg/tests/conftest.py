import random
from pathlib import Path

import pytest

from contactbridge.urdf import parse_urdf

FIXTURES = Path(__file__).parent / "fixtures"
DATA = Path(__file__).parents[1] / "src" / "contactbridge" / "data"


@pytest.fixture(scope="session")
def arm2r():
    return parse_urdf((FIXTURES / "arm2r.urdf").read_text())


@pytest.fixture(scope="session")
def arm6():
    return parse_urdf((DATA / "arm6.urdf").read_text())


@pytest.fixture()
def rng():
    return random.Random(20260823)
