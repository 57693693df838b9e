import os
import subprocess
import sys

import numpy as np
import pytest

from qrsr import kernels
from qrsr.qr_core import CodeConfig, central_window, encode
from qrsr.qr_core.rs import generator_poly
from qrsr.srl import gaussian_kernel

BACKENDS = kernels.backends()


def test_backend_selected():
    assert kernels.BACKEND in BACKENDS


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled backend not built")
class TestParity:
    py = BACKENDS["python"]

    @property
    def cy(self):
        return BACKENDS["cython"]

    def test_rs(self):
        rng = np.random.default_rng(0)
        gen = bytes(generator_poly(26))
        for _ in range(50):
            data = bytes(rng.integers(0, 256, 44, dtype=np.uint8))
            assert bytes(self.py.rs_remainder(data, gen)) == bytes(self.cy.rs_remainder(data, gen))
            block = data + bytes(rng.integers(0, 256, 26, dtype=np.uint8))
            assert list(self.py.rs_syndromes(block, 26)) == list(self.cy.rs_syndromes(block, 26))

    def test_module_stats_and_gradient(self):
        cfg = CodeConfig()
        rng = np.random.default_rng(1)
        gray = rng.random((740, 740))
        cells = encode("parity", cfg).cells
        w = np.ascontiguousarray(gaussian_kernel(20))
        c0, c = central_window(20)
        a = self.py.module_stats(gray, cells, w, 80, c0, c)
        b = self.cy.module_stats(gray, cells, w, 80, c0, c)
        assert np.allclose(a[0], b[0], rtol=1e-12, atol=1e-15)
        assert np.allclose(a[1], b[1], rtol=1e-12, atol=1e-15)
        phi = (rng.random((29, 29)) < 0.4).astype(np.uint8)
        ga = self.py.gray_gradient(gray, cells, w, phi, 80, 1 / 841)
        gb = self.cy.gray_gradient(gray, cells, w, phi, 80, 1 / 841)
        assert np.allclose(ga, gb, rtol=1e-12, atol=1e-18)
        assert np.array_equal(ga != 0, gb != 0)

    def test_exact_half_center(self):
        gray = np.full((740, 740), 0.5)
        ones = np.ones((29, 29), dtype=np.uint8)
        for impl in (self.py, self.cy):
            _, center = impl.module_stats(gray, ones, np.zeros((20, 20)), 80, 6, 7)
            assert (center == 0.5).all()


def test_pure_python_fallback_runs():
    code = (
        "from qrsr import kernels; assert kernels.BACKEND == 'python';"
        "from qrsr.qr_core import encode, rasterize, decode;"
        "assert decode(rasterize(encode('fallback'))).payload == b'fallback'"
    )
    env = {**os.environ, "QRSR_PURE_PYTHON": "1"}
    subprocess.run([sys.executable, "-c", code], check=True, env=env)
