"""Hash-kernel backend selection.

Imports the compiled extension when present, otherwise the pure-Python
fallback. Set ``ECUCHAIN_PURE_KERNELS=1`` to force the fallback (used by
the backend-comparison benchmark); outputs are identical either way.
"""

from __future__ import annotations

import os

if os.environ.get("ECUCHAIN_PURE_KERNELS"):
    from ._pure import merkle_root

    BACKEND = "pure"
else:
    try:
        from ._native import merkle_root  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        from ._pure import merkle_root  # type: ignore[no-redef]

        BACKEND = "pure"

__all__ = ["BACKEND", "merkle_root"]
