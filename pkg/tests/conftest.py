import pytest

from sskel.generators import irregular_l


@pytest.fixture
def lshape():
    """L-shaped hexagon tilted off the axes, one reflex vertex."""
    return irregular_l().rotated(0.05)
