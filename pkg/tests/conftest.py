import sys
from pathlib import Path

import pytest
import torch
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

settings.register_profile(
    "bcdlog",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("bcdlog")


@pytest.fixture
def single_thread():
    """Pin torch to one thread for bit-exact determinism contracts."""
    previous = torch.get_num_threads()
    torch.set_num_threads(1)
    yield
    torch.set_num_threads(previous)
