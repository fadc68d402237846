"""Kernel backend selection.

The depthwise convolution forward/backward pair is the hot loop of
training, so a compiled Cython extension is preferred when it was built.
The NumPy implementation is a drop-in fallback. Selection happens once at
import; set RADIO_AE_BACKEND=numpy (or =cython) to force a backend.

`benchmarks/bench_kernels.py` compares the two.
"""

import os

from . import _convnp

_choice = os.environ.get("RADIO_AE_BACKEND", "auto").lower()
if _choice not in ("auto", "cython", "numpy"):
    raise ValueError(f"RADIO_AE_BACKEND must be auto, cython or numpy, got {_choice!r}")

if _choice == "numpy":
    _impl = _convnp
    BACKEND = "numpy"
else:
    try:
        from . import _convext as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _convnp
        BACKEND = "numpy"

conv1d_fwd = _impl.conv1d_fwd
conv1d_bwd = _impl.conv1d_bwd
