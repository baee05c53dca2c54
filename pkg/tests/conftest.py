import struct

import numpy as np
import pytest

from otabyz import _kernels
from otabyz.data import synth_classify

ACCEPTANCE_LINES = []


def write_idx(path, magic, dims, payload: bytes):
    header = struct.pack(">I", magic) + struct.pack(f">{len(dims)}I", *dims)
    path.write_bytes(header + payload)
    return path


@pytest.fixture
def idx_pair(tmp_path):
    """Two 2x3 images with labels 7 and 2."""
    pixels = bytes([0, 255, 51, 102, 153, 204, 10, 20, 30, 40, 50, 60])
    img = write_idx(tmp_path / "img.idx", 0x803, (2, 2, 3), pixels)
    lbl = write_idx(tmp_path / "lbl.idx", 0x801, (2,), bytes([7, 2]))
    return img, lbl


@pytest.fixture
def small_clf():
    return synth_classify(120, 4, 3, 0.2, seed=11)


@pytest.fixture(params=["python", "cython"])
def kernels(request):
    if request.param == "cython" and _kernels.compiled is None:
        pytest.skip("compiled kernels not built")
    return _kernels.python if request.param == "python" else _kernels.compiled


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
