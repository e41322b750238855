"""Shared pytest setup: repository root on sys.path, run logs in a throwaway folder."""
import os
import sys
import tempfile
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

# must be set before logs/auth are imported
os.environ["XXZ_LOGS_FOLDER"] = tempfile.mkdtemp(prefix="xxz-logs-")
os.environ.setdefault("XXZ_API_KEYS", "test-key")


@pytest.fixture
def data_dir() -> Path:
    return ROOT / "data"
