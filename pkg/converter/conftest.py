import pytest
from bundlegen import build_bundle


@pytest.fixture
def bundle_factory(tmp_path):
    def build(**kwargs):
        return build_bundle(tmp_path / "raw", **kwargs)
    return build
