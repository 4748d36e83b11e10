import os
import subprocess
import sys

from wpansim import kernels


def _backend(env_extra):
    env = {**os.environ, **env_extra}
    out = subprocess.run([sys.executable, "-c", "import wpansim.kernels as k; print(k.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    return out.stdout.strip()


def test_pure_python_can_be_forced():
    assert _backend({"WPANSIM_PURE_PYTHON": "1"}) == "python"


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


def test_crc_accepts_bytes_like():
    assert kernels.crc16(b"123456789") == kernels.crc16(bytearray(b"123456789")) == 0x2189
