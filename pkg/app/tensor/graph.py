import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError, DomainError, NonFiniteError, ShapeError, ShrinkageError

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


class Tensor:
    """Dense float64 array with positive extents.

    Wraps the given array without copying when it already is float64.
    Zero-dimensional input is stored with shape ``(1,)``.
    """

    __slots__ = ("values",)

    def __init__(self, values, check_finite: bool = True):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if any(extent <= 0 for extent in arr.shape):
            raise ShapeError(f"tensor extents must be positive, got {arr.shape}")
        if check_finite and not np.all(np.isfinite(arr)):
            raise NonFiniteError("tensor holds non-finite values")
        self.values = arr

    @classmethod
    def scalar(cls, value: float) -> "Tensor":
        return cls(np.array([[float(value)]]))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return int(self.values.size)

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a single value, tensor has shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


@dataclass(frozen=True)
class Node:
    index: int
    op: str
    inputs: Tuple[int, ...] = ()
    name: Optional[str] = None
    value: Optional[np.ndarray] = None


Forward = Callable[[List[np.ndarray], Node], np.ndarray]
Backward = Callable[[np.ndarray, List[np.ndarray], np.ndarray, Node], Tuple[np.ndarray, ...]]


def _fail(node: Node, message: str) -> ShapeError:
    return ShapeError(message, node=node.index, op=node.op)


def _same_shape(node: Node, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise _fail(node, f"operands must have identical shapes, got {a.shape} and {b.shape}")


def _matmul_forward(args, node):
    a, b = args
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise _fail(node, f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def _matmul_backward(g, args, out, node):
    a, b = args
    return g @ b.T, a.T @ g


def _row_matmul_forward(args, node):
    a, b = args
    if a.ndim != 2 or b.ndim != 3 or b.shape[:2] != a.shape:
        raise _fail(node, f"cannot multiply rows of {a.shape} by per-row matrices {b.shape}")
    return np.einsum("ni,nio->no", a, b)


def _row_matmul_backward(g, args, out, node):
    a, b = args
    return np.einsum("no,nio->ni", g, b), a[:, :, None] * g[:, None, :]


def _multiply_forward(args, node):
    a, b = args
    _same_shape(node, a, b)
    return a * b


def _multiply_backward(g, args, out, node):
    a, b = args
    return g * b, g * a


def _add_forward(args, node):
    a, b = args
    _same_shape(node, a, b)
    return a + b


def _add_backward(g, args, out, node):
    return g, g


def _relu_forward(args, node):
    return np.maximum(args[0], 0.0)


def _relu_backward(g, args, out, node):
    # subgradient 0 at the kink
    return (g * (args[0] > 0.0),)


def _scale_columns_forward(args, node):
    a, v = args
    if a.ndim != 2 or v.ndim != 1 or v.shape[0] != a.shape[1]:
        raise _fail(node, f"column scales of shape {v.shape} do not match matrix {a.shape}")
    return a * v


def _scale_columns_backward(g, args, out, node):
    a, v = args
    return g * v, np.sum(g * a, axis=0)


def _scale_forward(args, node):
    a, s = args
    if s.size != 1:
        raise _fail(node, f"scale factor must hold one value, got shape {s.shape}")
    return a * s.reshape(-1)[0]


def _scale_backward(g, args, out, node):
    a, s = args
    return g * s.reshape(-1)[0], np.full(s.shape, np.sum(g * a))


def _append_ones_forward(args, node):
    a = args[0]
    if a.ndim != 2:
        raise _fail(node, f"append_ones needs a matrix, got shape {a.shape}")
    return np.hstack([a, np.ones((a.shape[0], 1))])


def _append_ones_backward(g, args, out, node):
    return (g[:, :-1],)


def _sum_forward(args, node):
    return np.array([np.sum(args[0])])


def _sum_backward(g, args, out, node):
    return (np.full(args[0].shape, g[0]),)


def _gaussian_ll_forward(args, node):
    y, mean, variance = args
    _same_shape(node, y, mean)
    if variance.size != 1:
        raise _fail(node, f"variance must hold one value, got shape {variance.shape}")
    v = float(variance.reshape(-1)[0])
    if not v > 0.0:
        raise DomainError(f"Gaussian variance must be positive, got {v}")
    resid = y - mean
    return np.array([-0.5 * y.size * (LOG_2PI + np.log(v)) - np.sum(resid * resid) / (2.0 * v)])


def _gaussian_ll_backward(g, args, out, node):
    y, mean, variance = args
    v = float(variance.reshape(-1)[0])
    resid = y - mean
    grad_mean = g[0] * resid / v
    grad_var = g[0] * (-0.5 * y.size / v + np.sum(resid * resid) / (2.0 * v * v))
    return -grad_mean, grad_mean, np.full(variance.shape, grad_var)


PRIMITIVES: Dict[str, Tuple[Forward, Backward]] = {
    "matmul": (_matmul_forward, _matmul_backward),
    "row_matmul": (_row_matmul_forward, _row_matmul_backward),
    "multiply": (_multiply_forward, _multiply_backward),
    "add": (_add_forward, _add_backward),
    "relu": (_relu_forward, _relu_backward),
    "scale_columns": (_scale_columns_forward, _scale_columns_backward),
    "scale": (_scale_forward, _scale_backward),
    "append_ones": (_append_ones_forward, _append_ones_backward),
    "sum": (_sum_forward, _sum_backward),
    "gaussian_log_likelihood": (_gaussian_ll_forward, _gaussian_ll_backward),
}

LEAVES = ("input", "parameter", "constant")


class ComputationGraph:
    """Static graph of primitive operations with reverse-mode gradients.

    Nodes are appended in construction order, which is therefore a valid
    topological order. ``evaluate`` caches every intermediate value for the
    following ``gradient`` call, so a graph must not be shared between threads.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.parameters: Dict[str, Tensor] = {}
        self._parameter_nodes: Dict[str, int] = {}
        self._input_nodes: Dict[str, int] = {}
        self._values: Optional[List[np.ndarray]] = None

    def _append(self, op: str, inputs: Sequence[int] = (), name: Optional[str] = None,
                value: Optional[np.ndarray] = None) -> int:
        for ref in inputs:
            if not 0 <= ref < len(self.nodes):
                raise ShapeError(f"node {ref} does not exist (graph has {len(self.nodes)} nodes)")
        node = Node(index=len(self.nodes), op=op, inputs=tuple(inputs), name=name, value=value)
        self.nodes.append(node)
        return node.index

    # Leaves

    def input(self, name: str) -> int:
        if name in self._input_nodes:
            return self._input_nodes[name]
        index = self._append("input", name=name)
        self._input_nodes[name] = index
        return index

    def parameter(self, name: str, value: Tensor) -> int:
        if name in self._parameter_nodes:
            raise ConfigurationError(f"parameter '{name}' already declared")
        index = self._append("parameter", name=name)
        self._parameter_nodes[name] = index
        self.parameters[name] = value
        return index

    def constant(self, value) -> int:
        return self._append("constant", value=Tensor(value).values)

    def set_parameter(self, name: str, value: Tensor) -> None:
        current = self.parameters.get(name)
        if current is None:
            raise ConfigurationError(f"unknown parameter '{name}'")
        if current.shape != value.shape:
            raise ShapeError(f"parameter '{name}' has shape {current.shape}, got {value.shape}")
        self.parameters[name] = value

    # Primitives

    def matmul(self, a: int, b: int) -> int:
        return self._append("matmul", (a, b))

    def row_matmul(self, a: int, b: int) -> int:
        """Row n of ``a`` times matrix n of the (N, in, out) stack ``b``."""
        return self._append("row_matmul", (a, b))

    def multiply(self, a: int, b: int) -> int:
        return self._append("multiply", (a, b))

    def add(self, a: int, b: int) -> int:
        return self._append("add", (a, b))

    def relu(self, a: int) -> int:
        return self._append("relu", (a,))

    def scale_columns(self, a: int, scales: int) -> int:
        """Right-multiply by a diagonal matrix given as a vector."""
        return self._append("scale_columns", (a, scales))

    def scale(self, a: int, factor: int) -> int:
        return self._append("scale", (a, factor))

    def append_ones(self, a: int) -> int:
        return self._append("append_ones", (a,))

    def sum(self, a: int) -> int:
        return self._append("sum", (a,))

    def gaussian_log_likelihood(self, y: int, mean: int, variance: int) -> int:
        return self._append("gaussian_log_likelihood", (y, mean, variance))

    # Execution

    def evaluate(self, inputs: Mapping[str, Tensor], output: Optional[int] = None) -> Tensor:
        if not self.nodes:
            raise ShrinkageError("cannot evaluate an empty graph")
        output = len(self.nodes) - 1 if output is None else output
        values: List[Optional[np.ndarray]] = [None] * len(self.nodes)
        for node in self.nodes[: output + 1]:
            if node.op == "input":
                bound = inputs.get(node.name)
                if bound is None:
                    raise ConfigurationError(f"input '{node.name}' is not bound")
                values[node.index] = bound.values
            elif node.op == "parameter":
                values[node.index] = self.parameters[node.name].values
            elif node.op == "constant":
                values[node.index] = node.value
            else:
                forward, _ = PRIMITIVES[node.op]
                values[node.index] = forward([values[i] for i in node.inputs], node)
        self._values = values
        return Tensor(values[output], check_finite=False)

    def gradient(self, output: Optional[int] = None) -> Dict[str, Tensor]:
        if self._values is None:
            raise ShrinkageError("evaluate must run before gradient")
        values = self._values
        output = len(self.nodes) - 1 if output is None else output
        if values[output] is None:
            raise ShrinkageError(f"node {output} was not evaluated")
        if values[output].size != 1:
            raise ShapeError("gradient needs a scalar output", node=output, op=self.nodes[output].op)

        adjoints: List[Optional[np.ndarray]] = [None] * len(self.nodes)
        adjoints[output] = np.ones_like(values[output])
        for node in reversed(self.nodes[: output + 1]):
            g = adjoints[node.index]
            if g is None or node.op in LEAVES:
                continue
            _, backward = PRIMITIVES[node.op]
            args = [values[i] for i in node.inputs]
            for ref, grad in zip(node.inputs, backward(g, args, values[node.index], node)):
                if np.any(np.isnan(grad)):
                    raise NonFiniteError("NaN in backward pass", where=f"node {node.index} ({node.op})")
                adjoints[ref] = grad if adjoints[ref] is None else adjoints[ref] + grad

        grads = {}
        for name, index in self._parameter_nodes.items():
            adj = adjoints[index]
            if adj is None:
                adj = np.zeros(self.parameters[name].shape)
            grads[name] = Tensor(adj, check_finite=False)
        return grads


def evaluate(graph: ComputationGraph, inputs: Mapping[str, Tensor], output: Optional[int] = None) -> Tensor:
    return graph.evaluate(inputs, output)


def gradient(graph: ComputationGraph, output: Optional[int] = None) -> Dict[str, Tensor]:
    return graph.gradient(output)


def gaussian_log_likelihood(y: Tensor, mean: Tensor, variance: float) -> float:
    """Σ_n log N(y_n; mean_n, variance) for a homoscedastic Gaussian."""
    node = Node(index=-1, op="gaussian_log_likelihood")
    return float(_gaussian_ll_forward([y.values, mean.values, np.array([float(variance)])], node)[0])
