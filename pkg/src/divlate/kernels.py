"""Kernel backend selection.

The compiled extension is preferred when importable; setting the environment
variable DIVLATE_PURE_PYTHON=1 forces the numpy fallback. Both expose the same
functions and produce bit-identical results.
"""

import os

if os.environ.get("DIVLATE_PURE_PYTHON"):
    from . import _pykernels as _impl

    KERNEL_BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        KERNEL_BACKEND = "compiled"
    except ImportError:
        from . import _pykernels as _impl

        KERNEL_BACKEND = "python"

bspline_basis_batch = _impl.bspline_basis_batch
bspline_basis_deriv_batch = _impl.bspline_basis_deriv_batch
grow_tree = _impl.grow_tree
tree_apply = _impl.tree_apply


def kernel_backend() -> str:
    """Name of the active kernel implementation ("compiled" or "python")."""
    return KERNEL_BACKEND
