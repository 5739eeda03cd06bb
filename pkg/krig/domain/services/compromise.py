"""
Compromises between possibly incompatible Markov kernels on finite product spaces.

Joint tables are arrays of shape ``system.sizes``; a kernel π_i is a table of the
same shape normalized along axis i. The Gibbs map F(P) = (1/r) Σ_i π_i P_{-i} is
applied in operator form, so the stationary computation never builds a dense
transition matrix.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from krig.config import settings
from krig.domain.entities.kernel_system import (
    FiniteKernelSystem,
    JointTable,
    MarginalFamily,
)
from krig.errors import DomainError, NonUniqueStationary, SolverFailure

logger = logging.getLogger(__name__)

STATIONARY_TOL = 1e-14
FIXED_POINT_TOL = 1e-10
KKT_TOL = 1e-9
CONSTRAINT_TOL = 1e-8
GRID_POINTS = 400


# --- marginals and assembly -------------------------------------------------------


def marginal_minus_i(joint: JointTable, i: int) -> np.ndarray:
    """The (r−1)-marginal P_{-i}: the joint summed over axis i (axis removed)."""
    if not 0 <= i < joint.probs.ndim:
        raise DomainError(f"axis {i} outside [0, {joint.probs.ndim})")
    return joint.probs.sum(axis=i)


def marginal_1d(probs: np.ndarray, k: int) -> np.ndarray:
    """Distribution of coordinate k alone."""
    axes = tuple(a for a in range(probs.ndim) if a != k)
    return probs.sum(axis=axes)


def assemble(kernel: np.ndarray, marginal: np.ndarray, i: int) -> JointTable:
    """
    The joint π_i m_{≠i}.

    Args:
        kernel: Table normalized along axis i
        marginal: Distribution over the other axes (axis i removed)
        i: Axis the kernel draws

    Returns:
        JointTable whose (r−1)-marginal on the other axes is ``marginal``
    """
    expanded = np.expand_dims(np.asarray(marginal, dtype=float), i)
    others = kernel.shape[:i] + kernel.shape[i + 1 :]
    if expanded.shape[:i] + expanded.shape[i + 1 :] != others:
        raise DomainError(
            f"marginal shape {marginal.shape} does not fit kernel {kernel.shape}"
        )
    probs = kernel * expanded
    return JointTable(probs=probs / probs.sum())


def marginal_family(joint: JointTable) -> MarginalFamily:
    """All r of the (r−1)-marginals of a joint, axis i kept with size 1."""
    probs = joint.probs
    tables = tuple(probs.sum(axis=i, keepdims=True) for i in range(probs.ndim))
    return MarginalFamily(tables=tables)


def assemble_family(
    system: FiniteKernelSystem, family: MarginalFamily
) -> list[JointTable]:
    """[π_i m_{≠i} for each axis i]."""
    if len(family.tables) != system.r:
        raise DomainError(
            f"family has {len(family.tables)} marginals, system has r={system.r}"
        )
    return [
        assemble(kernel, np.squeeze(table, axis=i), i)
        for i, (kernel, table) in enumerate(zip(system.kernels, family.tables))
    ]


def _pushforwards(system: FiniteKernelSystem, probs: np.ndarray) -> list[np.ndarray]:
    """[π_i P_{-i} for each i] as raw arrays."""
    return [k * probs.sum(axis=i, keepdims=True) for i, k in enumerate(system.kernels)]


def gibbs_map(system: FiniteKernelSystem, probs: np.ndarray) -> np.ndarray:
    """F(P) = (1/r) Σ_i π_i P_{-i}."""
    return sum(_pushforwards(system, probs)) / system.r


# --- the random-scan chain -------------------------------------------------------


def _check_size(system: FiniteKernelSystem, cap: int) -> None:
    if system.n_states > cap:
        raise SolverFailure(f"{system.n_states} joint states exceed the cap of {cap}")


def _axis_transition(system: FiniteKernelSystem, i: int) -> sparse.coo_matrix:
    """Sparse T_i(ω, ω′) = π_i(ω′_i | ω_{-i}) [ω′_{-i} = ω_{-i}], row-major states."""
    n = system.n_states
    index = np.moveaxis(np.arange(n).reshape(system.sizes), i, -1)
    kernel = np.moveaxis(system.kernels[i], i, -1)
    s = system.sizes[i]
    rows = np.broadcast_to(index[..., :, None], index.shape + (s,))
    cols = np.broadcast_to(index[..., None, :], index.shape + (s,))
    data = np.broadcast_to(kernel[..., None, :], index.shape + (s,))
    return sparse.coo_matrix((data.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n))


def gibbs_transition(system: FiniteKernelSystem) -> sparse.csr_matrix:
    """
    Transition matrix of the equiprobable random-scan Gibbs sampler.

    T(ω, ω′) = (1/r) Σ_i π_i(ω′_i | ω_{-i}) [ω′_{-i} = ω_{-i}], states in row-major
    order.
    """
    _check_size(system, settings.MAX_JOINT_STATES)
    total = sum(_axis_transition(system, i).tocsr() for i in range(system.r))
    out = (total / system.r).tocsr()
    out.eliminate_zeros()
    return out


def closed_classes(transition: sparse.csr_matrix) -> list[np.ndarray]:
    """State sets of the closed communicating classes of a stochastic matrix."""
    n_comp, labels = csgraph.connected_components(
        transition, directed=True, connection="strong"
    )
    coo = transition.tocoo()
    leaving = coo.data > 0.0
    leaks = labels[coo.row[leaving]] != labels[coo.col[leaving]]
    open_labels = np.unique(labels[coo.row[leaving][leaks]])
    closed = np.setdiff1d(np.arange(n_comp), open_labels)
    return [np.flatnonzero(labels == c) for c in closed]


def _aitken(x0: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    d1 = x2 - x1
    denom = d1 - (x1 - x0)
    safe = np.abs(denom) > 1e-300
    out = x2.copy()
    out[safe] = x2[safe] - d1[safe] ** 2 / denom[safe]
    out = np.clip(out, 0.0, None)
    return out / out.sum()


def gibbs_compromise(
    system: FiniteKernelSystem, max_iterations: int = 200_000
) -> JointTable:
    """
    The Gibbs compromise P_G = (1/r) Σ_i π_i (P_G)_{-i}.

    Power iteration on the lazy map P ↦ ½(P + F(P)) from the uniform table, with a
    guarded Aitken extrapolation every few sweeps.

    Raises:
        NonUniqueStationary: If the chain has more than one closed class
        SolverFailure: If the fixed-point residual stays above 1e-10
    """
    classes = closed_classes(gibbs_transition(system))
    if len(classes) != 1:
        raise NonUniqueStationary(
            f"random-scan chain has {len(classes)} closed classes; "
            "the Gibbs compromise is not unique"
        )
    logger.info(
        f"🔄 Computing Gibbs compromise over {system.n_states} states (r={system.r})"
    )

    p = np.full(system.sizes, 1.0 / system.n_states)
    history: list[np.ndarray] = []
    for it in range(1, max_iterations + 1):
        nxt = 0.5 * (p + gibbs_map(system, p))
        diff = float(np.abs(nxt - p).sum())
        p = nxt
        if diff < STATIONARY_TOL:
            break
        history = (history + [p])[-3:]
        if len(history) == 3 and it % 10 == 0:
            candidate = _aitken(*history)
            lazy = 0.5 * (candidate + gibbs_map(system, candidate))
            plain = 0.5 * (p + gibbs_map(system, p))
            if np.abs(lazy - candidate).sum() < np.abs(plain - p).sum():
                p = candidate
                history = []
    residual = float(np.abs(p - gibbs_map(system, p)).sum())
    if residual >= FIXED_POINT_TOL:
        raise SolverFailure(
            f"Gibbs compromise residual {residual:.3e} after {it} iterations"
        )
    logger.info(f"✅ Gibbs compromise after {it} iterations (residual {residual:.2e})")
    return JointTable(probs=p / p.sum())


# --- misfit functional and compromise checks -------------------------------------


def energy(joint: JointTable, system: FiniteKernelSystem) -> float:
    """E_λ(P) = Σ_i Σ_ω (π_i P_{-i}(ω) − P(ω))² for the counting measure λ."""
    p = joint.probs
    return float(sum(np.sum((q - p) ** 2) for q in _pushforwards(system, p)))


def is_compromise(
    joint: JointTable, system: FiniteKernelSystem, tol: float = 1e-9
) -> bool:
    """Every π_i P_{-i} is absolutely continuous w.r.t. P and P_{-i} = (F(P))_{-i}."""
    p = joint.probs
    pushed = _pushforwards(system, p)
    null = p <= 0.0
    if any(np.any(q[null] > tol) for q in pushed):
        return False
    mixed = sum(pushed) / system.r
    return all(
        float(np.max(np.abs(p.sum(axis=i) - mixed.sum(axis=i)))) <= tol
        for i in range(system.r)
    )


# --- quadratic programs over the simplex -----------------------------------------


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = ind[u - css / ind > 0][-1]
    return np.maximum(v - css[rho - 1] / rho, 0.0)


def _dense_operators(system: FiniteKernelSystem) -> list[np.ndarray]:
    """A_i with (A_i p) = π_i P_{-i} on row-major flattened tables."""
    return [_axis_transition(system, i).toarray().T for i in range(system.r)]


def _energy_matrix(ops: Sequence[np.ndarray]) -> np.ndarray:
    eye = np.eye(ops[0].shape[0])
    return sum((a - eye).T @ (a - eye) for a in ops)


def _weak_constraints(
    system: FiniteKernelSystem, ops: Sequence[np.ndarray]
) -> np.ndarray:
    """Rows of C with C p = 0 iff all π_i P_{-i} share the 1-marginals of π_1 P_{-1}."""
    n = system.n_states
    rows = []
    for k, size in enumerate(system.sizes):
        coord = np.moveaxis(np.indices(system.sizes), 0, -1).reshape(n, -1)[:, k]
        agg = np.zeros((size, n))
        agg[coord, np.arange(n)] = 1.0
        rows.extend(agg @ (ops[i] - ops[0]) for i in range(1, system.r))
    return np.vstack(rows) if rows else np.zeros((0, n))


def _kkt_residual(q: np.ndarray, p: np.ndarray) -> float:
    return float(np.max(np.abs(p - project_simplex(p - 2.0 * q @ p))))


def _projected_gradient(
    q: np.ndarray, p: np.ndarray, max_iterations: int, tol: float
) -> Tuple[np.ndarray, int]:
    lipschitz = 2.0 * float(np.linalg.eigvalsh(q)[-1]) or 1.0
    for it in range(1, max_iterations + 1):
        nxt = project_simplex(p - (2.0 * q @ p) / lipschitz)
        if float(np.max(np.abs(nxt - p))) < tol:
            return nxt, it
        p = nxt
    return p, max_iterations


def _active_set_polish(
    q: np.ndarray, p: np.ndarray, eq: np.ndarray, rhs: np.ndarray
) -> Optional[np.ndarray]:
    """Equality-constrained QP on the support of p; None if it leaves the simplex."""
    support = p > 1e-12
    for _ in range(p.size):
        idx = np.flatnonzero(support)
        e_s = eq[:, idx]
        m = e_s.shape[0]
        kkt = np.block(
            [[2.0 * q[np.ix_(idx, idx)], e_s.T], [e_s, np.zeros((m, m))]]
        )
        target = np.concatenate([np.zeros(idx.size), rhs])
        sol = np.linalg.lstsq(kkt, target, rcond=None)[0]
        cand = np.zeros_like(p)
        cand[idx] = sol[: idx.size]
        if np.all(cand >= -1e-13):
            cand = np.clip(cand, 0.0, None)
            return cand / cand.sum()
        support[idx[sol[: idx.size] < 0.0]] = False
        if not support.any():
            return None
    return None


def _to_joint(system: FiniteKernelSystem, p: np.ndarray) -> JointTable:
    p = np.clip(p, 0.0, None)
    return JointTable(probs=(p / p.sum()).reshape(system.sizes))


def minimize_energy_unconstrained(
    system: FiniteKernelSystem, max_iterations: int = 100_000
) -> JointTable:
    """
    Global minimizer of E_λ over all joint tables.

    Raises:
        SolverFailure: If the KKT residual stays above 1e-9 or the system is too
            large
    """
    _check_size(system, settings.QP_MAX_STATES)
    q = _energy_matrix(_dense_operators(system))
    n = system.n_states
    start = np.full(n, 1.0 / n)
    p, iterations = _projected_gradient(q, start, max_iterations, 1e-15)
    polished = _active_set_polish(q, p, np.ones((1, n)), np.ones(1))
    if polished is not None and _kkt_residual(q, polished) <= _kkt_residual(q, p):
        p = polished
    residual = _kkt_residual(q, p)
    if residual >= KKT_TOL:
        raise SolverFailure(f"unconstrained E-minimizer KKT residual {residual:.3e}")
    logger.info(
        f"✅ Energy minimizer after {iterations} gradient steps (KKT {residual:.1e})"
    )
    return _to_joint(system, p)


def minimize_energy_weak(
    system: FiniteKernelSystem,
    penalties: Sequence[float] = (1.0, 1e2, 1e4, 1e6),
    max_iterations: int = 20_000,
) -> JointTable:
    """
    Minimizer of E_λ among weak compromises.

    Weak compatibility asks every π_i P_{-i} to share all 1-marginals. A penalty
    ramp on the constraint residual locates the support, then the equality-constrained
    problem is solved there exactly.

    Raises:
        SolverFailure: On constraint residual above 1e-8 or a violated absolute
            continuity
    """
    _check_size(system, settings.QP_MAX_STATES)
    ops = _dense_operators(system)
    q = _energy_matrix(ops)
    c = _weak_constraints(system, ops)
    n = system.n_states
    p = np.full(n, 1.0 / n)
    for rho in penalties:
        p, _ = _projected_gradient(q + rho * c.T @ c, p, max_iterations, 1e-15)
    eq = np.vstack([c, np.ones((1, n))])
    rhs = np.concatenate([np.zeros(c.shape[0]), [1.0]])
    polished = _active_set_polish(q, p, eq, rhs)
    if polished is not None:
        p = polished
    violation = float(np.max(np.abs(c @ p))) if c.size else 0.0
    if violation >= CONSTRAINT_TOL:
        raise SolverFailure(f"weak-compatibility residual {violation:.3e}")
    null = p <= 1e-12
    if any(np.any((a @ p)[null] > CONSTRAINT_TOL) for a in ops):
        raise SolverFailure("weak compromise violates absolute continuity")
    logger.info(f"✅ Optimal weak compromise (constraint residual {violation:.1e})")
    return _to_joint(system, p)


# --- continuous pairs ------------------------------------------------------------


def ratio_compatibility_check(
    p1: np.ndarray, p2: np.ndarray, tol: float = 1e-8
) -> bool:
    """
    Whether log p1(x|y) − log p2(y|x) splits as g(x) + h(y) on the grid.

    Both grids are indexed [x, y]. The test is that every mixed second difference of
    the log-ratio is below ``tol`` in absolute value.

    Raises:
        DomainError: If a grid has nonpositive entries or the shapes differ
    """
    p1, p2 = np.asarray(p1, dtype=float), np.asarray(p2, dtype=float)
    if p1.shape != p2.shape or p1.ndim != 2:
        raise DomainError(
            f"grids must be 2-D of equal shape, got {p1.shape} and {p2.shape}"
        )
    if np.any(p1 <= 0.0) or np.any(p2 <= 0.0):
        raise DomainError("density grids must be strictly positive")
    ratio = np.log(p1) - np.log(p2)
    mixed = ratio[1:, 1:] - ratio[1:, :-1] - ratio[:-1, 1:] + ratio[:-1, :-1]
    return bool(np.max(np.abs(mixed)) < tol)


def grid_axis(lower: float, upper: float, points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(lower, upper, points)


def trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    h = np.diff(axis)
    w = np.zeros_like(axis)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def density_grid(
    density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    box: Tuple[float, float, float, float],
    points: int = GRID_POINTS,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """density(x, y) on a uniform grid over (xmin, xmax, ymin, ymax), indexed [x, y]."""
    xs = grid_axis(box[0], box[1], points)
    ys = grid_axis(box[2], box[3], points)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return xs, ys, np.asarray(density(gx, gy), dtype=float)


def discretize_kernel(
    density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    xs: np.ndarray,
    ys: np.ndarray,
    axis: int,
) -> np.ndarray:
    """
    Finite kernel from a conditional density on a grid.

    ``density(x, y)`` is the density of coordinate ``axis`` given the other one. Each
    row is weighted by the trapezoid rule along ``axis`` and normalized to sum to 1.
    """
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    weights = trapezoid_weights(xs if axis == 0 else ys)
    values = np.asarray(density(gx, gy), dtype=float)
    values = values * np.expand_dims(weights, 1 - axis)
    return values / values.sum(axis=axis, keepdims=True)


def discretize_density(
    density: Callable[[np.ndarray], np.ndarray], axis: np.ndarray
) -> np.ndarray:
    """Probability vector from a 1-D density by trapezoid weights."""
    mass = np.asarray(density(axis), dtype=float) * trapezoid_weights(axis)
    return mass / mass.sum()


def grid_moments(
    joint: JointTable, xs: np.ndarray, ys: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix of a 2-D grid joint."""
    p = joint.probs
    px, py = p.sum(axis=1), p.sum(axis=0)
    mean = np.array([px @ xs, py @ ys])
    cx, cy = xs - mean[0], ys - mean[1]
    cov = np.array(
        [
            [px @ cx**2, cx @ p @ cy],
            [cx @ p @ cy, py @ cy**2],
        ]
    )
    return mean, cov


def relabel(
    system: FiniteKernelSystem, permutations: Sequence[Sequence[int]]
) -> FiniteKernelSystem:
    """Apply a bijective relabeling per axis; state ω maps to (perm_k[ω_k])_k."""
    if len(permutations) != system.r:
        raise DomainError(f"need {system.r} permutations")
    kernels = []
    for kernel in system.kernels:
        out = kernel
        for k, perm in enumerate(permutations):
            inverse = np.argsort(np.asarray(perm))
            out = np.take(out, inverse, axis=k)
        kernels.append(np.ascontiguousarray(out))
    return FiniteKernelSystem(sizes=system.sizes, kernels=tuple(kernels))


def from_joint(probs: np.ndarray) -> FiniteKernelSystem:
    """The compatible system of full conditionals of a strictly positive joint table."""
    probs = np.asarray(probs, dtype=float)
    if np.any(probs <= 0.0):
        raise DomainError("joint must be strictly positive to define its conditionals")
    kernels = tuple(probs / probs.sum(axis=i, keepdims=True) for i in range(probs.ndim))
    return FiniteKernelSystem(sizes=tuple(probs.shape), kernels=kernels)

