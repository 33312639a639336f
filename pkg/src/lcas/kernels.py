"""Kernel backend selection.

The hot paths (batch fuzzification, tree construction, forest voting) exist
twice: a compiled extension (lcas._core) and a pure numpy fallback
(lcas._pure). Both produce bit-identical results; the compiled one is just
faster. Selection order:

  1. LCAS_KERNEL_BACKEND=pure or =compiled forces a backend; asking for the
     compiled one when the extension failed to build raises ImportError.
  2. Otherwise the compiled extension is used when importable, else pure.

BACKEND names the active choice so callers and benchmarks can report it.
"""

import os

_requested = os.environ.get("LCAS_KERNEL_BACKEND", "").strip().lower()

if _requested not in ("", "pure", "compiled"):
    raise ImportError(
        "LCAS_KERNEL_BACKEND must be 'pure' or 'compiled', got %r" % _requested
    )

if _requested == "pure":
    from lcas import _pure as _impl
elif _requested == "compiled":
    from lcas import _core as _impl  # raises if the extension is missing
else:
    try:
        from lcas import _core as _impl
    except ImportError:
        from lcas import _pure as _impl

BACKEND = _impl.BACKEND
fuzzify_batch = _impl.fuzzify_batch
tree_build = _impl.tree_build
forest_votes = _impl.forest_votes
