import pytest

from hybridris.channel import SceneConfig


@pytest.fixture
def small_scene():
    return SceneConfig(num_ris_elements=32)
