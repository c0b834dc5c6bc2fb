"""Hot-kernel selection: the compiled extension when importable, else numpy.

Set ``FBMLAB_PURE=1`` to force the numpy path.
"""
import os

from . import _morrey_py

if os.environ.get("FBMLAB_PURE") == "1":
    ball_sums = _morrey_py.ball_sums
    BACKEND = "numpy"
else:
    try:
        from ._morrey_ext import ball_sums  # noqa: F401
        BACKEND = "cython"
    except ImportError:
        ball_sums = _morrey_py.ball_sums
        BACKEND = "numpy"

ball_sums_py = _morrey_py.ball_sums
