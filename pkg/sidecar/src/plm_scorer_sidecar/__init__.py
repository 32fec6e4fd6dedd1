"""Masked-LM scorer sidecar speaking the line-JSON scoring protocol."""

__version__ = "0.1.0"

from .scorer import MaskedLMScorer, ScoredText, SidecarConfig

__all__ = ["MaskedLMScorer", "ScoredText", "SidecarConfig", "__version__"]
