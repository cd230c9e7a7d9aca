import os
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def acceptance_cache() -> Path:
    """Persistent scan directory so acceptance DMRG runs once per machine.

    The runner's own resumability provides the caching: completed rows are
    read back from table.csv, so re-running the suite costs seconds.
    Point ZNGAUGE_ACCEPTANCE_CACHE somewhere else (or delete the directory)
    to force fresh solves.
    """
    root = os.environ.get("ZNGAUGE_ACCEPTANCE_CACHE",
                          str(Path(__file__).resolve().parent.parent / ".acceptance_cache"))
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path
