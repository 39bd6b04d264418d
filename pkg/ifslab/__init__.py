"""ifslab."""

# Ensure all hookspecs are declared.
from . import hooks

__all__ = ["hooks"]
