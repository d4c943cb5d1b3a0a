"""Entropic optimal transport between point clouds.

The Sinkhorn solver alternates the scaling updates u <- a / (K v) and
v <- b / (K^T u) with K = exp(-C / epsilon) and uniform marginals
a = 1/n, b = 1/m, starting from v = 1/m. The plan is diag(u) K diag(v).

Two numerical regimes are provided. The log-domain solver (default) keeps
the potentials f = epsilon log u and g = epsilon log v and replaces every
matrix-vector product by a log-sum-exp, which stays finite for the small
epsilon used in training (1e-3 on squared-metre costs). The multiplicative
solver is the textbook form and is kept for cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cloud_core import as_cloud
from .errors import ConvergenceError, DomainError, NumericUnderflowError

METRICS = ("sq_euclidean", "euclidean", "l1")
FEASIBILITY_TOL = 1e-9
EXACT_EMD_MAX_N = 64
NEWTON_MAX_SIZE = 2048


@dataclass(frozen=True)
class SinkhornParams:
    """Solver settings.

    ``tol`` is the maximum marginal violation at which iteration stops early.
    With ``tol=None`` exactly ``max_iters`` iterations run (the fixed
    175-iteration training regime); ``converged`` is then judged against
    ``FEASIBILITY_TOL``.

    ``polish`` applies only in the log domain with ``tol`` set: if the scaling
    iterations have not reached ``tol`` after ``polish_after`` iterations (or
    at ``max_iters``), damped Newton steps on the dual potentials finish the
    solve; scaling resumes if they fall short. The fixed point is the same; small epsilon makes plain
    scaling contract very slowly once the plan is close to a permutation.
    """

    epsilon: float = 1e-3
    max_iters: int = 175
    tol: float | None = None
    log_domain: bool = True
    polish: bool = True
    polish_after: int = 1000
    max_newton_steps: int = 100

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol is not None and not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")


@dataclass
class SinkhornResult:
    plan: np.ndarray
    converged: bool
    iters: int
    marginal_violation: float
    # log scaling vectors: log u and log v
    log_u: np.ndarray
    log_v: np.ndarray
    newton_steps: int = 0


def cost_matrix(X, Y, metric: str = "sq_euclidean") -> np.ndarray:
    X = as_cloud(X, dims=None)
    Y = as_cloud(Y, dims=None)
    if X.shape[1] != Y.shape[1]:
        raise DomainError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    diff = X[:, None, :] - Y[None, :, :]
    if metric == "sq_euclidean":
        return np.einsum("ijk,ijk->ij", diff, diff)
    if metric == "euclidean":
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if metric == "l1":
        return np.abs(diff).sum(axis=-1)
    raise DomainError(f"unknown metric {metric!r}; expected one of {METRICS}")


def _lse_rows(M: np.ndarray) -> np.ndarray:
    top = M.max(axis=1)
    return top + np.log(np.exp(M - top[:, None]).sum(axis=1))


def _violation(plan: np.ndarray, a: float, b: float) -> float:
    return float(max(np.abs(plan.sum(axis=1) - a).max(), np.abs(plan.sum(axis=0) - b).max()))


def _sinkhorn_log(C, params):
    n, m = C.shape
    eps = params.epsilon
    log_a, log_b = -np.log(n), -np.log(m)
    Ct = np.ascontiguousarray(C.T)
    f = np.zeros(n)
    g = np.full(m, eps * log_b)
    tol = params.tol if params.tol is not None else FEASIBILITY_TOL
    polish = params.tol is not None and params.polish and n + m <= NEWTON_MAX_SIZE
    it = steps = 0
    viol = np.inf

    def scale(f, g, it, stop):
        viol = np.inf
        while it < stop:
            it += 1
            f = eps * log_a - eps * _lse_rows((g[None, :] - C) / eps)
            g = eps * log_b - eps * _lse_rows((f[None, :] - Ct) / eps)
            if params.tol is not None or it == stop:
                # columns are exact after the g update; rows carry the violation
                row_mass = np.exp(_lse_rows((f[:, None] + g[None, :] - C) / eps))
                viol = float(np.abs(row_mass - 1.0 / n).max())
                if params.tol is not None and viol <= tol:
                    break
        return f, g, it, viol

    stops = [params.max_iters]
    if polish and params.polish_after < params.max_iters:
        stops.insert(0, params.polish_after)
    for stop in stops:
        f, g, it, viol = scale(f, g, it, stop)
        if not (np.isfinite(f).all() and np.isfinite(g).all()):
            raise NumericUnderflowError("non-finite Sinkhorn potentials")
        if viol <= tol:
            break
        if polish:
            f, g, k, viol = _newton_polish(C, f, g, eps, tol, params.max_newton_steps)
            steps += k
            if viol <= tol:
                break
    plan = np.exp((f[:, None] + g[None, :] - C) / eps)
    viol = _violation(plan, 1.0 / n, 1.0 / m)
    return SinkhornResult(plan, viol <= tol, it, viol, f / eps, g / eps, steps)


def _newton_polish(C, f, g, eps, tol, max_steps):
    """Damped Newton ascent on the entropic dual in the potentials (f, g).

    The dual is <a,f> + <b,g> - eps * sum exp((f_i + g_j - C_ij) / eps). Its
    Hessian is singular along (1, -1) and nearly singular along every block
    of the plan that is numerically decoupled from the rest, so the Newton
    system is solved by truncated least squares.
    """
    n, m = C.shape
    a, b = 1.0 / n, 1.0 / m

    def dual(f, g):
        with np.errstate(over="ignore", invalid="ignore"):
            P = np.exp((f[:, None] + g[None, :] - C) / eps)
        return a * f.sum() + b * g.sum() - eps * P.sum(), P

    obj, P = dual(f, g)
    for step in range(1, max_steps + 1):
        r = a - P.sum(axis=1)
        c = b - P.sum(axis=0)
        viol = float(max(np.abs(r).max(), np.abs(c).max()))
        if viol <= tol:
            return f, g, step - 1, viol
        M = np.block([[np.diag(P.sum(axis=1)), P], [P.T, np.diag(P.sum(axis=0))]])
        rhs = np.concatenate([r, c])
        delta = eps * np.linalg.lstsq(M, rhs, rcond=1e-13)[0]
        slope = float(rhs @ delta)
        t = 1.0
        while t > 1e-10:
            nf, ng = f + t * delta[:n], g + t * delta[n:]
            new_obj, new_P = dual(nf, ng)
            if np.isfinite(new_obj) and new_obj >= obj + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            return f, g, step, viol
        f, g, obj, P = nf, ng, new_obj, new_P
    return f, g, max_steps, _violation(P, a, b)


def _sinkhorn_mult(C, params):
    n, m = C.shape
    a, b = 1.0 / n, 1.0 / m
    with np.errstate(under="ignore"):
        K = np.exp(-C / params.epsilon)
    v = np.full(m, b)
    tol = params.tol if params.tol is not None else FEASIBILITY_TOL
    hint = "multiplicative Sinkhorn underflowed; rerun with log_domain=True"
    it = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for it in range(1, params.max_iters + 1):
            Kv = K @ v
            if not (Kv > 0).all() or not np.isfinite(Kv).all():
                raise NumericUnderflowError(hint)
            u = a / Kv
            Ktu = K.T @ u
            if not (Ktu > 0).all() or not np.isfinite(Ktu).all():
                raise NumericUnderflowError(hint)
            v = b / Ktu
            if not (np.isfinite(u).all() and np.isfinite(v).all()):
                raise NumericUnderflowError(hint)
            if params.tol is not None:
                viol = float(np.abs(u * (K @ v) - a).max())
                if viol <= tol:
                    break
    plan = u[:, None] * K * v[None, :]
    if not np.isfinite(plan).all():
        raise NumericUnderflowError(hint)
    viol = _violation(plan, a, b)
    return SinkhornResult(plan, viol <= tol, it, viol, np.log(u), np.log(v))


def sinkhorn_plan(C, params: SinkhornParams = SinkhornParams()) -> SinkhornResult:
    """Entropic optimal coupling for cost matrix ``C`` under uniform marginals."""
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.size == 0:
        raise DomainError(f"cost matrix must be a non-empty 2-D array, got shape {C.shape}")
    if not np.isfinite(C).all():
        raise DomainError("cost matrix has non-finite entries")
    if params.log_domain:
        return _sinkhorn_log(C, params)
    return _sinkhorn_mult(C, params)


def entropy(P) -> float:
    """Discrete entropy -sum P (log P - 1), with 0 log 0 taken as 0."""
    P = np.asarray(P, dtype=np.float64)
    if (P < 0).any():
        raise DomainError("transport plan has negative entries")
    pos = P[P > 0]
    return float(-np.sum(pos * (np.log(pos) - 1.0)))


@dataclass
class SinkhornDistance:
    distance: float
    transport_cost: float
    entropy: float
    result: SinkhornResult

    @property
    def plan(self) -> np.ndarray:
        return self.result.plan


def sinkhorn_distance(X, Y, params: SinkhornParams = SinkhornParams(),
                      metric: str = "sq_euclidean") -> SinkhornDistance:
    """<P*, C> - epsilon H(P*) for the entropic optimal plan P*."""
    C = cost_matrix(X, Y, metric)
    res = sinkhorn_plan(C, params)
    cost = float(np.sum(res.plan * C))
    h = entropy(res.plan)
    return SinkhornDistance(cost - params.epsilon * h, cost, h, res)


def sinkhorn_grad(X, Y, params: SinkhornParams = SinkhornParams(),
                  metric: str = "sq_euclidean") -> np.ndarray:
    """Gradient of the Sinkhorn distance with respect to the points of ``Y``.

    Envelope form: the converged plan is held fixed and only the cost is
    differentiated, d/dy_j = sum_i P_ij dC_ij/dy_j.
    """
    X = as_cloud(X, dims=None)
    Y = as_cloud(Y, dims=None)
    res = sinkhorn_distance(X, Y, params, metric).result
    if not res.converged:
        raise ConvergenceError(
            f"Sinkhorn did not converge (violation {res.marginal_violation:.3g} after {res.iters} iterations)"
        )
    P = res.plan
    diff = Y[None, :, :] - X[:, None, :]
    if metric == "sq_euclidean":
        dC = 2.0 * diff
    elif metric == "euclidean":
        norm = np.sqrt((diff**2).sum(-1, keepdims=True))
        dC = np.divide(diff, norm, out=np.zeros_like(diff), where=norm > 0)
    elif metric == "l1":
        dC = np.sign(diff)
    else:
        raise DomainError(f"unknown metric {metric!r}")
    return np.einsum("ij,ijk->jk", P, dC)


def exact_emd(X, Y, metric: str = "sq_euclidean") -> float:
    """Unregularised OT cost for equal-size clouds via optimal assignment."""
    X = as_cloud(X, dims=None)
    Y = as_cloud(Y, dims=None)
    if len(X) != len(Y):
        raise DomainError(f"exact EMD needs equal sizes, got {len(X)} and {len(Y)}")
    if len(X) == 0 or len(X) > EXACT_EMD_MAX_N:
        raise DomainError(f"exact EMD supports 1 <= n <= {EXACT_EMD_MAX_N}, got {len(X)}")
    C = cost_matrix(X, Y, metric)
    rows, cols = linear_sum_assignment(C)
    return float(C[rows, cols].sum() / len(X))
