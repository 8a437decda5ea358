"""Publication-style figures from disordyn artifact bundles.

Strictly read-only: every figure is a display transform of files listed in
the bundle manifest; nothing is ever recomputed or re-simulated.
"""

__version__ = "0.1.0"

from .bundle_reader import Bundle, MissingArtifactError
from .figures import KINDS, FigureRequest, render

__all__ = ["Bundle", "FigureRequest", "KINDS", "MissingArtifactError", "render"]
