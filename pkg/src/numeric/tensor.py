"""Dense tensors with reverse-mode automatic differentiation.

A ``Tensor`` wraps a row-major float64 ndarray. Operations on tensors that
require gradients record their parents and a vector-Jacobian product; the
``Graph`` of a loss is recovered by a topological walk over those links.
"""

import contextlib
import contextvars
import logging
from typing import (
    Any,
    Callable,
    Dict,
    Iterator,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import numpy as np

from src.utils.errors import ShapeError

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float64

ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]
VJP = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "grad_enabled", default=True
)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate operations without recording them for differentiation."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


@contextlib.contextmanager
def enable_grad() -> Iterator[None]:
    """Record operations again inside an enclosing ``no_grad`` block."""
    token = _grad_enabled.set(True)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


class Tensor:
    """n-dimensional real array participating in a reverse-mode graph."""

    __slots__ = ("data", "requires_grad", "grad", "parents", "vjp", "op", "name")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ) -> None:
        self.data: np.ndarray = np.array(data, dtype=DEFAULT_DTYPE)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = (
            np.zeros_like(self.data) if requires_grad else None
        )
        self.parents: Tuple["Tensor", ...] = ()
        self.vjp: Optional[VJP] = None
        self.op = "leaf"
        self.name = name

    @classmethod
    def from_op(
        cls, data: np.ndarray, parents: Sequence["Tensor"], vjp: VJP, op: str
    ) -> "Tensor":
        """Build the output of a primitive; tracked only if a parent needs grads."""
        tracked = is_grad_enabled() and any(p.requires_grad for p in parents)
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=DEFAULT_DTYPE)
        out.requires_grad = tracked
        out.grad = None
        out.parents = tuple(parents) if tracked else ()
        out.vjp = vjp if tracked else None
        out.op = op
        out.name = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self.vjp is None

    @property
    def T(self) -> "Tensor":
        from src.numeric import ops

        return ops.transpose(self)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def reshape(self, *shape: int) -> "Tensor":
        from src.numeric import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def sum(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        from src.numeric import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        from src.numeric import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def __add__(self, other: Any) -> "Tensor":
        from src.numeric import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from src.numeric import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from src.numeric import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from src.numeric import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from src.numeric import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from src.numeric import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from src.numeric import ops

        return ops.div(self, other)

    def __neg__(self) -> "Tensor":
        from src.numeric import ops

        return ops.neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from src.numeric import ops

        return ops.matmul(self, other)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op}{flag})"


class Graph:
    """Executed operations reachable from some roots, parents before children."""

    def __init__(self, nodes: List[Tensor]) -> None:
        self.nodes = nodes

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def trace(
        cls, roots: Sequence[Tensor], stop_at: Optional[Set[int]] = None
    ) -> "Graph":
        """Topologically order every tracked node feeding ``roots``.

        Nodes whose id is in ``stop_at`` are kept but not expanded.
        """
        order: List[Tensor] = []
        visited: Set[int] = set()
        for root in roots:
            if not root.requires_grad or id(root) in visited:
                continue
            stack: List[Tuple[Tensor, bool]] = [(root, False)]
            while stack:
                node, expanded = stack.pop()
                if expanded:
                    order.append(node)
                    continue
                if id(node) in visited:
                    continue
                visited.add(id(node))
                stack.append((node, True))
                if stop_at is not None and id(node) in stop_at:
                    continue
                for parent in node.parents:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return cls(order)


def _accumulate(
    graph: Graph,
    seeds: Dict[int, np.ndarray],
    terminals: Optional[Set[int]] = None,
) -> Dict[int, np.ndarray]:
    """Run reverse accumulation; returns gradients reaching leaves/terminals."""
    grads = dict(seeds)
    reached: Dict[int, np.ndarray] = {}
    for node in reversed(graph.nodes):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.vjp is None or (terminals is not None and id(node) in terminals):
            reached[id(node)] = g
            continue
        for parent, parent_grad in zip(node.parents, node.vjp(g)):
            if parent_grad is None or not parent.requires_grad:
                continue
            if parent_grad.shape != parent.data.shape:
                raise ShapeError(
                    f"{node.op} produced gradient of shape {parent_grad.shape} "
                    f"for input of shape {parent.data.shape}"
                )
            key = id(parent)
            grads[key] = grads[key] + parent_grad if key in grads else parent_grad
    return reached


def backward(loss: Tensor, graph: Optional[Graph] = None) -> Graph:
    """Accumulate d(loss)/d(leaf) into ``grad`` of every reachable leaf."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return graph or Graph([])
    graph = graph or Graph.trace([loss])
    reached = _accumulate(graph, {id(loss): np.ones_like(loss.data)})
    for node in graph.nodes:
        g = reached.get(id(node))
        if g is None or node.vjp is not None:
            continue
        node.grad = g.copy() if node.grad is None else node.grad + g
    return graph


def grad(
    outputs: Sequence[Tensor],
    grad_outputs: Sequence[np.ndarray],
    inputs: Sequence[Tensor],
    graph: Optional[Graph] = None,
) -> List[np.ndarray]:
    """Vector-Jacobian products of ``outputs`` w.r.t. ``inputs``.

    Does not touch ``.grad``; ``inputs`` act as terminals of the walk. Pass a
    previously traced ``graph`` to reuse it across calls.
    """
    terminals = {id(t) for t in inputs}
    if graph is None:
        graph = Graph.trace(outputs, stop_at=terminals)
    seeds: Dict[int, np.ndarray] = {}
    for out, g in zip(outputs, grad_outputs):
        if not out.requires_grad:
            continue
        g = np.asarray(g, dtype=DEFAULT_DTYPE).reshape(out.data.shape)
        seeds[id(out)] = seeds[id(out)] + g if id(out) in seeds else g
    reached = _accumulate(graph, seeds, terminals)
    return [reached.get(id(t), np.zeros_like(t.data)) for t in inputs]
