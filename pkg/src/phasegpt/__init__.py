"""Phase-space dynamics and generalized probabilistic theory toolkit."""
from .grid import PhaseField, PhaseGrid, inner_product, integrate, translate
from .kernels import Kernel
from .states import StateSpec, build_state

__all__ = ["PhaseField", "PhaseGrid", "inner_product", "integrate", "translate", "Kernel", "StateSpec",
           "build_state"]
__version__ = "0.1.0"
