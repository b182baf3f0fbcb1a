"""Pick the compiled kernel when it is importable, else the numpy twin."""
import os

if os.environ.get("STEERLAB_PURE_PYTHON"):
    from steerlab import _kernel_py as kernel
    BACKEND = "python"
else:
    try:
        from steerlab import _kernel as kernel
        BACKEND = "compiled"
    except ImportError:
        from steerlab import _kernel_py as kernel
        BACKEND = "python"

__all__ = ["kernel", "BACKEND"]
