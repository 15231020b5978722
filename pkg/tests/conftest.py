import pytest

from setup.create_reference_scenarios import set_reference_scenarios


@pytest.fixture(scope="session")
def reference_scenarios(tmp_path_factory):
    """Reference scenario documents written once per session."""
    return set_reference_scenarios(tmp_path_factory.mktemp("configs"))
