from .graph import ComputationGraph, Node, Tensor, evaluate, gaussian_log_likelihood, gradient

__all__ = [
    "ComputationGraph",
    "Node",
    "Tensor",
    "evaluate",
    "gaussian_log_likelihood",
    "gradient",
]

from .gradcheck import numeric_gradient, relative_error

__all__ += ["numeric_gradient", "relative_error"]

from .optim import Adam

__all__ += ["Adam"]
