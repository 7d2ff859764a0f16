import numpy as np
import pytest

from boars.grid import SpectralGrid


@pytest.fixture
def small_grid():
    """Deterministic 12x12 grid with L=32 non-degenerate spectra."""
    rng = np.random.default_rng(123)
    h, w, l = 12, 12, 32
    image = rng.random((h, w))
    bias = np.linspace(-4, 4, l)
    base = np.abs(np.tanh((np.abs(bias) - 2.0) / 1.0))
    spectra = base[None, None, :] * (0.5 + rng.random((h, w, 1))) + 0.05 * rng.random((h, w, l))
    return SpectralGrid(image=image, spectra=spectra, bias=bias)
