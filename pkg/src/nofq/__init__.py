"""Classical and quantum Number-on-the-Forehead protocol workbench."""

from .core import ForeheadView, InputMatrix, forehead_view, gip_eval, pad_to_k
from .errors import CapExceeded, NOFError, ProtocolError, QuantumStateError, SpecFormatError

__all__ = [
    "ForeheadView", "InputMatrix", "forehead_view", "gip_eval", "pad_to_k",
    "CapExceeded", "NOFError", "ProtocolError", "QuantumStateError", "SpecFormatError",
]
