"""Backend selection for the assignment search.

The compiled extension is used when it was built and the problem fits in
64 circuits; ``BRA_PURE_PYTHON=1`` forces the reference implementation.
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel as _compiled  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _compiled = None

COMPILED_MAX = 64


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def default_backend() -> str:
    if _compiled is None or os.environ.get("BRA_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    return "compiled"


def enumerate_assignments(role_masks, edges, adj, m, injective=True, limit=None, backend=None):
    backend = backend or default_backend()
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not built")
        if m <= COMPILED_MAX:
            return _compiled.enumerate_assignments(role_masks, edges, adj, m, injective, limit)
    elif backend != "python":
        raise ValueError(f"unknown backend {backend!r}")
    return _kernel_py.enumerate_assignments(role_masks, edges, adj, m, injective, limit)
