"""hp interpolants on geometric meshes, compiled into sparse ReLU networks."""

__version__ = "0.1.0"

from .network import (  # noqa: F401
    Layer,
    NeuralNetwork,
    deserialize,
    grad_realize,
    grad_realize_batch,
    realize,
    realize_batch,
    serialize,
    stats,
)
from .assembly import NetConfig, build_phi_eps_c, build_phi_eps_f, build_vector  # noqa: F401
from .verify import verify_calculus  # noqa: F401
