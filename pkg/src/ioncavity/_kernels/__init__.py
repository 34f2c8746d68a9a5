"""Kernel selection: compiled extension if available, NumPy otherwise.

Set ``IONCAVITY_KERNEL=python`` or ``=compiled`` to force a backend (the
latter raises if the extension is missing).  The active backend is
exported as :data:`backend`.
"""

import os

_requested = os.environ.get("IONCAVITY_KERNEL", "").strip().lower()

if _requested == "python":
    from . import fallback as _impl
elif _requested == "compiled":
    from . import _core as _impl  # ImportError here is intentional
else:
    try:
        from . import _core as _impl
    except ImportError:
        from . import fallback as _impl

backend = _impl.BACKEND
rk4_lindblad = _impl.rk4_lindblad
mcwf_chunk = _impl.mcwf_chunk
JumpCapError = _impl.JumpCapError
