"""Out-of-process hallucination scorer speaking hadas-scorer/1 over stdio."""

from .scorers import ScorerSet
from .server import PROTOCOL, serve

__version__ = "0.1.0"
