"""Screentone-preserving manga rescaling.

Rescales the structure of a bitonal manga image while keeping its
screentone patterns at their original pixel scale, by tiling verbatim
anchor-centered patches into proposals and fusing them with a recurrent,
confidence-gated selection pass.  Ships a procedural screentone corpus
generator and shift-tolerant quality metrics for evaluation.
"""

__version__ = "0.1.0"
