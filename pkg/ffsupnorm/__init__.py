"""
ffsupnorm: exact sup-norm experiments for GL2 newforms over F_q(T).
"""

from .errors import ConfigError, FfsnError, IdentityViolation

__version__ = "0.1.0"

__all__ = ["ConfigError", "FfsnError", "IdentityViolation", "__version__"]
