import pathlib

import pytest

import akgnn as ak

FIXTURES = pathlib.Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def blobs():
    """(Dataset, CsrGraph) for the bundled separable fixture."""
    return ak.load_dataset(FIXTURES / "blobs60")


@pytest.fixture(scope="session")
def blobs_dir():
    return FIXTURES / "blobs60"


@pytest.fixture(scope="session")
def tiny3_dir():
    return FIXTURES / "tiny3"
