"""Grace: an HTTP proxy that rewrites responses into formats the
requesting user's browser can render, driven by per-user translation
rules over MIME types."""

from .app import GraceApp, TransformOutcome
from .config import ProxyConfig
from .errors import GraceError
from .raster import ConvertOptions, RasterImage
from .rules import (
    Profile,
    ProfileSet,
    TransformCatalog,
    TransformChain,
    TransformDef,
    parse_profiles,
    parse_transformations,
    plan_chain,
)

__version__ = "0.1.0"

__all__ = [
    "ConvertOptions",
    "GraceApp",
    "GraceError",
    "Profile",
    "ProfileSet",
    "ProxyConfig",
    "RasterImage",
    "TransformCatalog",
    "TransformChain",
    "TransformDef",
    "TransformOutcome",
    "__version__",
    "parse_profiles",
    "parse_transformations",
    "plan_chain",
]
