import numpy as np
import pytest

from sincfraclap.errors import ShapeError
from sincfraclap.grid import ProblemParams
from sincfraclap.transform import crop, dft_forward, dft_inverse, embed_padded, set_workers, workers


def naive_dft(x, sign=-1):
    M = x.shape[0]
    F = np.exp(sign * 2j * np.pi * np.outer(np.arange(M), np.arange(M)) / M)
    out = x.astype(complex)
    for ax in range(x.ndim):
        out = np.moveaxis(np.tensordot(F, np.moveaxis(out, ax, 0), axes=1), 0, ax)
    return out


@pytest.mark.parametrize("shape", [(8,), (6, 6), (4, 4, 4)])
def test_dft_matches_naive(shape, rng):
    x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    np.testing.assert_allclose(dft_forward(x), naive_dft(x), atol=1e-12)
    np.testing.assert_allclose(dft_inverse(x), naive_dft(x, +1) / x.size, atol=1e-12)
    np.testing.assert_allclose(dft_inverse(dft_forward(x)), x, atol=1e-13)


def test_dft_rejects_non_cube():
    with pytest.raises(ShapeError):
        dft_forward(np.zeros((4, 6)))


def test_embed_and_crop():
    p = ProblemParams(2, 4, 0.5)
    u = np.arange(16.0).reshape(4, 4)
    b = embed_padded(u)
    assert b.shape == (8, 8) and b.dtype == complex
    np.testing.assert_array_equal(b[4:, 4:].real, u)
    assert np.count_nonzero(b) == 15
    np.testing.assert_array_equal(crop(b, p), b[:4, :4].real)


def test_workers(monkeypatch):
    set_workers(None)
    monkeypatch.setenv("FRACLAP_THREADS", "3")
    assert workers() == 3
    set_workers(2)
    assert workers() == 2
    set_workers(0)
    assert workers() == 1
