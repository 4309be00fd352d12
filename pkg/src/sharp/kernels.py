"""Backend selection for the numeric inner loops.

The compiled extension is preferred. Set ``SHARP_PURE_PYTHON=1`` before import
to force the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("SHARP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

blend_frequencies = _impl.blend_frequencies
rotate_pairs = _impl.rotate_pairs
pair_scores = _impl.pair_scores
radial_sums = _impl.radial_sums

__all__ = [
    "BACKEND",
    "blend_frequencies",
    "rotate_pairs",
    "pair_scores",
    "radial_sums",
]
