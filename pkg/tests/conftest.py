import pytest

from nodalheat.acceptance import Workspace


@pytest.fixture(scope="session")
def ws():
    """Shared in-memory memo of solutions and eigenpairs."""
    return Workspace()
