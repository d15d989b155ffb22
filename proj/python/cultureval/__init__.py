"""Python bindings for the cultureval evaluation pipeline."""

from ._core import (
    __version__,
    build_extraction_prompt,
    consensus,
    detect_language,
    detect_script,
    diversity,
    granularity,
    instantiate_prompts,
    parse_extraction_output,
    resolve_surface,
)

__all__ = [
    "__version__",
    "build_extraction_prompt",
    "consensus",
    "detect_language",
    "detect_script",
    "diversity",
    "granularity",
    "instantiate_prompts",
    "parse_extraction_output",
    "resolve_surface",
]
