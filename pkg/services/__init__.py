from . import grid_wavefield
from . import analytic_states
from . import quantum_potential
from . import classical_flow
from . import guidance
from . import scenarios
from . import validation
from . import commands

__all__ = [
    "grid_wavefield",
    "analytic_states",
    "quantum_potential",
    "classical_flow",
    "guidance",
    "scenarios",
    "validation",
    "commands",
]
