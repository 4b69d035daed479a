import pytest

from kcmdrop.bootstrap import FAMILIES, classify, select_canonical_directions
from kcmdrop.droplets import BoundaryRegion, DropletConstants, Frame
from kcmdrop.scenario import load_scenario


@pytest.fixture(scope="session")
def three_rule():
    return FAMILIES["three-rule"]


@pytest.fixture(scope="session")
def frame(three_rule):
    dirs = select_canonical_directions(classify(three_rule), three_rule)
    return Frame(dirs)


@pytest.fixture(scope="session")
def scenario():
    return load_scenario("three-rule")


@pytest.fixture(scope="session")
def compact():
    # small constants chain used where the shipped defaults make droplets huge
    return DropletConstants("1/2", 1, "11/10", "11/5", "5/2", 3, 4)


@pytest.fixture(scope="session")
def region(frame):
    return BoundaryRegion.for_frame(frame)
