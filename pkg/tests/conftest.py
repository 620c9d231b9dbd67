import numpy as np
import pytest

from rsvhmc import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Compile once so test timings measure the operations, not the JIT.
    _kernels.warmup(np.float64)
    _kernels.warmup(np.float32)
