import pytest
from hypothesis import settings

from portico.demo import build_demo_workspace
from portico.runtime.container import Container

settings.register_profile("portico", max_examples=120, deadline=None)
settings.load_profile("portico")


@pytest.fixture(scope="session")
def demo_workspace(tmp_path_factory):
    """The demo deploy directory, shared read-only across tests."""
    return build_demo_workspace(tmp_path_factory.mktemp("demo-root"))


@pytest.fixture
def demo(demo_workspace):
    """A freshly booted demo container."""
    container = Container(app_name="search", root=demo_workspace)
    container.scan_and_apply()
    yield container
    container.stop_autoscan()
