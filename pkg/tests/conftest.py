import numpy as np
import pytest

from fiberlift import _backend, _fallback

try:
    from fiberlift import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKENDS = ["python"] + (["cython"] if _kernels is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    impl = _fallback if request.param == "python" else _kernels
    monkeypatch.setattr(_backend, "emd", impl.emd)
    monkeypatch.setattr(_backend, "base_orbit", impl.base_orbit)
    monkeypatch.setattr(_backend, "BACKEND", request.param)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
