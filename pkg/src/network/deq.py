"""Deep-equilibrium fusion of several token streams.

The operator ``f_θ(Z; X) = FFN(Z + Attention(Q, K, V)) + Z`` mixes all
sources through one joint attention, where every query, key and value token
is a projection of its source ``X_i`` plus a projection of its own state
block ``Z_i``. The fused features are the fixed point ``Z* = f_θ(Z*; X)``
reached from ``Z⁰ = 0``; gradients come from the implicit function theorem
by solving the adjoint fixed point instead of backpropagating through the
solver iterations.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.constants import defaults
from src.models.config import FusionConfig, SolverConfig
from src.models.trace import DEQTrace
from src.network.blocks import attention
from src.network.module import Module, spectral_normalize, xavier_uniform
from src.network.solvers import relative_residual, solve
from src.numeric import Graph, SplitMix64, Tensor, enable_grad, grad, no_grad, ops
from src.utils.errors import ShapeError

logger = logging.getLogger(__name__)

FFN_INIT_SCALE = 0.05
PROJECTIONS = ("q", "k", "v")

# fn(z, xs) -> f(z; xs), z is the token-concatenated state
StateMap = Callable[[Tensor, List[Tensor]], Tensor]


def _contractive_ffn(rng: SplitMix64, dim: int, hidden: int) -> Tuple[np.ndarray, np.ndarray]:
    """FFN weights with ``FFN(u) ≈ −κ·u`` near the origin.

    ``W1 = s·Qᵀ`` and ``W2 = −κ/(s·gelu'(0))·Q`` for orthonormal ``Q``, so
    ``f(Z) ≈ (1 − κ) Z − κ A`` at initialization.
    """
    q, _ = np.linalg.qr(rng.normal((hidden, dim)))
    w1 = FFN_INIT_SCALE * q.T
    w2 = -(defaults.CONTRACTION / (0.5 * FFN_INIT_SCALE)) * q
    return w1, w2


class DEQOperator(Module):
    """Per-source input and state projections plus a shared FFN."""

    def __init__(
        self,
        rng: SplitMix64,
        dim: int,
        sources: int,
        mlp_ratio: int = defaults.MLP_RATIO,
    ) -> None:
        super().__init__()
        if sources < 1:
            raise ShapeError(f"DEQOperator needs at least one source, got {sources}")
        self.dim = dim
        self.sources = sources
        input_scale = defaults.SPECTRAL_SCALE
        state_scale = defaults.SPECTRAL_SCALE / np.sqrt(dim)
        self.w_x: List[Tuple[Tensor, Tensor, Tensor]] = []
        self.w_z: List[Tuple[Tensor, Tensor, Tensor]] = []
        for i in range(sources):
            src_rng = rng.spawn(i + 1)
            self.w_x.append(self._projections(src_rng, "w", i, input_scale))
            self.w_z.append(self._projections(src_rng.spawn(10), "u", i, state_scale))
        hidden = dim * mlp_ratio
        w1, w2 = _contractive_ffn(rng.spawn(100), dim, hidden)
        self.ffn_w1 = self.param("ffn_w1", w1)
        self.ffn_b1 = self.param("ffn_b1", np.zeros(hidden))
        self.ffn_w2 = self.param("ffn_w2", w2)
        self.ffn_b2 = self.param("ffn_b2", np.zeros(dim))

    def _projections(
        self, rng: SplitMix64, prefix: str, index: int, scale: float
    ) -> Tuple[Tensor, Tensor, Tensor]:
        q, k, v = (
            self.param(
                f"{prefix}_{name}{index}",
                spectral_normalize(xavier_uniform(rng.spawn(j + 1), self.dim, self.dim), scale),
            )
            for j, name in enumerate(PROJECTIONS)
        )
        return q, k, v

    def ffn(self, u: Tensor) -> Tensor:
        return ops.gelu(u @ self.ffn_w1 + self.ffn_b1) @ self.ffn_w2 + self.ffn_b2


def f_theta(z_blocks: Sequence[Tensor], x_blocks: Sequence[Tensor], op: DEQOperator) -> List[Tensor]:
    """One application of the fusion map, re-split into per-source blocks.

    Raises:
        ShapeError: If block counts or per-block shapes disagree.
    """
    if len(z_blocks) != len(x_blocks) or len(x_blocks) != op.sources:
        raise ShapeError(
            f"f_theta: {len(z_blocks)} state blocks, {len(x_blocks)} sources, "
            f"operator built for {op.sources}"
        )
    for i, (z, x) in enumerate(zip(z_blocks, x_blocks)):
        if z.shape != x.shape or x.ndim != 2 or x.shape[1] != op.dim:
            raise ShapeError(f"f_theta: source {i} is {x.shape}, state {z.shape}, expected L×{op.dim}")

    def project(k: int) -> Tensor:
        return ops.concat(
            [x @ wx[k] + z @ wz[k] for x, z, wx, wz in zip(x_blocks, z_blocks, op.w_x, op.w_z)],
            axis=0,
        )

    joint = attention(project(0), project(1), project(2))
    z_cat = ops.concat(list(z_blocks), axis=0)
    out = op.ffn(z_cat + joint) + z_cat
    return ops.split(out, [z.shape[0] for z in z_blocks], axis=0)


def _state_map(op: DEQOperator, lengths: Sequence[int]) -> StateMap:
    def fn(z: Tensor, xs: List[Tensor]) -> Tensor:
        return ops.concat(f_theta(ops.split(z, lengths, axis=0), xs, op), axis=0)

    return fn


def _implicit_grads(
    fn: StateMap,
    z_star: np.ndarray,
    inputs: Sequence[Tensor],
    params: Sequence[Tensor],
    cfg: SolverConfig,
    trace: DEQTrace,
    grad_out: np.ndarray,
) -> List[np.ndarray]:
    """Solve ``w = g + Jᵀw`` at the equilibrium and push ``w`` through one ``f``.

    Returns gradients for ``inputs`` followed by ``params``.
    """
    with enable_grad():
        z_leaf = Tensor(z_star, requires_grad=True)
        x_leaves = [Tensor(x.data, requires_grad=True) for x in inputs]
        fz = fn(z_leaf, x_leaves)
    graph = Graph.trace([fz])
    g = np.asarray(grad_out, dtype=np.float64).ravel()

    def jt(w: np.ndarray) -> np.ndarray:
        return grad([fz], [w.reshape(z_star.shape)], [z_leaf], graph)[0].ravel()

    w, converged = solve(lambda w: g + jt(w), g, cfg, trace, record=trace.adjoint_residuals)
    trace.adjoint_converged = converged
    if not converged:
        message = (
            f"adjoint solve did not reach tol {cfg.tol} in {cfg.max_iter} iterations; "
            f"using {cfg.neumann_terms}-term Neumann series"
        )
        logger.warning(f"{trace.call_site or 'deq'}: {message}")
        trace.warn(message)
        w = g.copy()
        term = g.copy()
        for _ in range(cfg.neumann_terms - 1):
            term = jt(term)
            w = w + term
    return grad([fz], [w.reshape(z_star.shape)], list(x_leaves) + list(params), graph)


def implicit_fixed_point(
    fn: StateMap,
    inputs: Sequence[Tensor],
    params: Sequence[Tensor],
    z_shape: Tuple[int, ...],
    cfg: SolverConfig,
    trace: DEQTrace,
) -> Tensor:
    """Equilibrium of ``z = fn(z, inputs)`` as a single differentiable node.

    The forward solve is not recorded; the node's vector-Jacobian product
    is the implicit gradient with respect to ``inputs`` and ``params``.
    """
    frozen = [Tensor(x.data) for x in inputs]

    def step(flat: np.ndarray) -> np.ndarray:
        with no_grad():
            return fn(Tensor(flat.reshape(z_shape)), frozen).data.ravel()

    flat, converged = solve(step, np.zeros(int(np.prod(z_shape))), cfg, trace)
    if not converged:
        logger.warning(
            f"{trace.call_site or 'deq'}: no fixed point within tol {cfg.tol} after "
            f"{trace.iterations} iterations (best residual {min(trace.residuals):.3e})"
        )
    z_star = flat.reshape(z_shape)

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, ...]:
        return tuple(_implicit_grads(fn, z_star, inputs, params, cfg, trace, g))

    return Tensor.from_op(z_star, list(inputs) + list(params), vjp, "deq")


def _new_trace(cfg: SolverConfig, call_site: str) -> DEQTrace:
    return DEQTrace(solver=cfg.method, tol=cfg.tol, call_site=call_site)


def deq_solve(
    x_blocks: Sequence[Tensor],
    op: DEQOperator,
    cfg: SolverConfig,
    call_site: str = "",
) -> Tuple[List[np.ndarray], DEQTrace]:
    """Forward equilibrium only; returns per-source arrays and the trace."""
    trace = _new_trace(cfg, call_site)
    lengths = [x.shape[0] for x in x_blocks]
    with no_grad():
        z = implicit_fixed_point(
            _state_map(op, lengths), list(x_blocks), [], (sum(lengths), op.dim), cfg, trace
        )
    splits = np.cumsum(lengths)[:-1]
    return np.split(z.data, splits, axis=0), trace


def deq_backward(
    grad_out: Sequence[np.ndarray],
    z_star: Sequence[np.ndarray],
    x_blocks: Sequence[Tensor],
    op: DEQOperator,
    cfg: SolverConfig,
    trace: Optional[DEQTrace] = None,
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Implicit gradients of a solved equilibrium.

    Args:
        grad_out: Upstream gradient per source block.
        z_star: Equilibrium blocks from ``deq_solve``.

    Returns:
        Gradients for ``x_blocks`` and for ``op.parameters()`` in order.
    """
    trace = trace or _new_trace(cfg, "backward")
    lengths = [x.shape[0] for x in x_blocks]
    params = op.parameters()
    grads = _implicit_grads(
        _state_map(op, lengths),
        np.concatenate(list(z_star), axis=0),
        list(x_blocks),
        params,
        cfg,
        trace,
        np.concatenate([np.asarray(g) for g in grad_out], axis=0),
    )
    return grads[: len(x_blocks)], grads[len(x_blocks) :]


def deq_fuse(
    sources: Sequence[Tensor],
    op: DEQOperator,
    cfg: SolverConfig,
    call_site: str = "",
) -> Tuple[List[Tensor], DEQTrace]:
    """Fuse 2 or 3 token streams and hand back their equilibrium blocks in order."""
    if len(sources) != op.sources:
        raise ShapeError(f"deq_fuse: operator takes {op.sources} sources, got {len(sources)}")
    trace = _new_trace(cfg, call_site)
    lengths = [x.shape[0] for x in sources]
    z = implicit_fixed_point(
        _state_map(op, lengths), list(sources), op.parameters(), (sum(lengths), op.dim), cfg, trace
    )
    logger.debug(
        f"{call_site or 'deq'}: {trace.iterations} iterations, residual {trace.last_residual:.3e}"
    )
    return ops.split(z, lengths, axis=0), trace


class FusionLayer(Module):
    """One DEQFuse call site, realized as an equilibrium or a fixed-depth stack."""

    def __init__(
        self,
        rng: SplitMix64,
        dim: int,
        sources: int,
        fusion: FusionConfig,
        solver: SolverConfig,
        mlp_ratio: int = defaults.MLP_RATIO,
    ) -> None:
        super().__init__()
        self.fusion = fusion
        self.solver = solver
        count = fusion.depth if fusion.mode == "stacked" else 1
        self.operators = [
            self.child(f"op{i}", DEQOperator(rng.spawn(i + 1), dim, sources, mlp_ratio))
            for i in range(count)
        ]

    def __call__(
        self, sources: Sequence[Tensor], call_site: str = ""
    ) -> Tuple[List[Tensor], DEQTrace]:
        if self.fusion.mode == "deq":
            return deq_fuse(sources, self.operators[0], self.solver, call_site)
        return self._fixed_depth(sources, call_site)

    def _fixed_depth(
        self, sources: Sequence[Tensor], call_site: str
    ) -> Tuple[List[Tensor], DEQTrace]:
        if self.fusion.mode == "unrolled":
            schedule = [self.operators[0]] * self.fusion.n_layer
        else:
            schedule = list(self.operators)
        trace = DEQTrace(solver=self.fusion.mode, tol=self.solver.tol, call_site=call_site)
        z: List[Tensor] = [Tensor(np.zeros(x.shape)) for x in sources]
        for op in schedule:
            nxt = f_theta(z, sources, op)
            trace.residuals.append(
                relative_residual(
                    np.concatenate([b.data for b in z]), np.concatenate([b.data for b in nxt])
                )
            )
            z = nxt
        return z, trace
