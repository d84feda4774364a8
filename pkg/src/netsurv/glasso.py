"""L1-penalized Gaussian log-likelihood maximization for sparse precision matrices.

Solves  max_Theta  log det(Theta) - tr(S Theta) - rho * ||Theta||_1
by a monotone accelerated proximal-gradient method on Theta. Soft-thresholding
produces exact structural zeros and every accepted iterate is symmetric
positive definite, so the objective trace is non-decreasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg


@dataclass(frozen=True)
class GlassoConfig:
    rho: float
    penalize_diagonal: bool = True
    max_iterations: int = 1000
    tolerance: float = 1e-6
    zero_epsilon: float = 1e-8

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.tolerance <= 0 or self.zero_epsilon <= 0:
            raise ValueError("tolerance and zero_epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class PrecisionMatrix:
    gene_ids: tuple
    theta: np.ndarray
    rho_used: float
    converged: bool
    iterations: int
    objective_value: float
    objective_trace: tuple = field(default=(), repr=False)

    @property
    def p(self) -> int:
        return self.theta.shape[0]


def _chol_logdet(theta: np.ndarray):
    """Cholesky factor and log-determinant; returns (None, nan) if not PD."""
    try:
        chol = linalg.cholesky(theta, lower=True)
    except linalg.LinAlgError:
        return None, float("nan")
    return chol, 2.0 * float(np.sum(np.log(np.diag(chol))))


def _penalty_mask(p: int, penalize_diagonal: bool) -> np.ndarray:
    mask = np.ones((p, p))
    if not penalize_diagonal:
        np.fill_diagonal(mask, 0.0)
    return mask


def objective(theta, S, rho: float, penalize_diagonal: bool = True) -> tuple[float, float]:
    """Split objective: F = log det(theta) - tr(S theta), R = rho * ||theta||_1.

    The full penalized objective is F - R. The L1 norm runs over the penalized
    entries only (off-diagonal when the diagonal is unpenalized).
    """
    theta = np.asarray(theta, dtype=float)
    S = np.asarray(S, dtype=float)
    _, logdet = _chol_logdet(theta)
    if not np.isfinite(logdet):
        raise ValueError("theta is not positive definite: log det undefined")
    F = logdet - float(np.sum(S * theta))
    mask = _penalty_mask(theta.shape[0], penalize_diagonal)
    R = rho * float(np.sum(np.abs(theta) * mask))
    return F, R


def kkt_residual(theta, S, rho: float, penalize_diagonal: bool = True,
                 zero_epsilon: float = 1e-8) -> float:
    """Max violation of the stationarity conditions at ``theta``.

    With W = theta^-1: penalized nonzero entries must satisfy
    W_ij = S_ij + rho * sign(theta_ij); penalized zeros |W_ij - S_ij| <= rho;
    unpenalized entries W_ij = S_ij.
    """
    theta = np.asarray(theta, dtype=float)
    S = np.asarray(S, dtype=float)
    chol, logdet = _chol_logdet(theta)
    if chol is None:
        raise ValueError("theta is not positive definite")
    W = linalg.cho_solve((chol, True), np.eye(theta.shape[0]))
    diff = W - S
    mask = _penalty_mask(theta.shape[0], penalize_diagonal).astype(bool)
    active = (np.abs(theta) >= zero_epsilon) & mask
    inactive = (~active) & mask
    res = 0.0
    if active.any():
        res = max(res, float(np.max(np.abs(diff[active] - rho * np.sign(theta[active])))))
    if inactive.any():
        res = max(res, float(np.max(np.maximum(0.0, np.abs(diff[inactive]) - rho))))
    if not mask.all():
        unpen = ~mask
        res = max(res, float(np.max(np.abs(diff[unpen]))))
    return res


def _soft(x: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def glasso_fit(S, config: GlassoConfig, gene_ids=None) -> PrecisionMatrix:
    """Fit a sparse precision matrix to the covariance ``S``."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("S must be square")
    if not np.allclose(S, S.T, atol=1e-10):
        raise ValueError("S must be symmetric")
    p = S.shape[0]
    if gene_ids is None:
        gene_ids = tuple("g%d" % i for i in range(p))
    gene_ids = tuple(gene_ids)
    if len(gene_ids) != p:
        raise ValueError("gene_ids length does not match S")
    rho = config.rho

    if rho == 0.0:
        chol, _ = _chol_logdet(S)
        if chol is None or np.min(np.diag(chol)) < 1e-10 * max(1.0, np.max(np.diag(chol))):
            raise ValueError("unpenalized problem ill-posed: S is singular")
        theta = linalg.cho_solve((chol, True), np.eye(p))
        theta = (theta + theta.T) / 2.0
        F, R = objective(theta, S, rho, config.penalize_diagonal)
        return PrecisionMatrix(gene_ids, theta, rho, True, 0, F - R, (F - R,))

    mask = _penalty_mask(p, config.penalize_diagonal)
    theta = np.diag(1.0 / (np.diag(S) + rho))
    chol, logdet = _chol_logdet(theta)
    g_val = logdet - float(np.sum(S * theta))
    phi = g_val - rho * float(np.sum(np.abs(theta) * mask))

    # monotone FISTA state
    y = theta.copy()
    theta_prev = theta.copy()
    tau = 1.0
    trace = [phi]
    eye = np.eye(p)
    converged = False
    it = 0
    W_prev = linalg.cho_solve((chol, True), eye)
    step = None

    for it in range(1, config.max_iterations + 1):
        chol_y, logdet_y = _chol_logdet(y)
        if chol_y is None:
            # extrapolation left the PD cone: restart momentum at the last iterate
            y = theta.copy()
            tau = 1.0
            chol_y, logdet_y = _chol_logdet(y)
        Wy = linalg.cho_solve((chol_y, True), eye)
        grad = Wy - S
        g_y = logdet_y - float(np.sum(S * y))
        if step is None:
            step = 0.9 / float(linalg.norm(Wy, 2)) ** 2
        else:
            step = min(step * 1.5, 1e6)

        # backtracking prox step from y
        while True:
            z = _soft(y + step * grad, step * rho * mask)
            z = (z + z.T) / 2.0
            chol_z, logdet_z = _chol_logdet(z)
            if chol_z is not None:
                g_z = logdet_z - float(np.sum(S * z))
                dz = z - y
                if g_z >= g_y + float(np.sum(grad * dz)) - float(np.sum(dz * dz)) / (2.0 * step) - 1e-12:
                    break
            step *= 0.5
            if step < 1e-16:
                z = theta.copy()
                chol_z, logdet_z = _chol_logdet(z)
                g_z = logdet_z - float(np.sum(S * z))
                break

        phi_z = g_z - rho * float(np.sum(np.abs(z) * mask))
        # monotone step: keep the better of the prox point and the last iterate
        if phi_z >= phi:
            theta_new = z
            phi_new = phi_z
            chol_new = chol_z
            tau_next = (1.0 + np.sqrt(1.0 + 4.0 * tau * tau)) / 2.0
            y = z + (tau / tau_next) * (z - theta_new) \
                + ((tau - 1.0) / tau_next) * (theta_new - theta_prev)
            tau = tau_next
        else:
            # objective did not improve: restart the momentum at the last iterate
            theta_new = theta
            phi_new = phi
            chol_new = None
            y = theta.copy()
            tau = 1.0
        theta_prev = theta
        theta = theta_new
        phi = phi_new
        trace.append(phi)

        if chol_new is None:
            chol_new, _ = _chol_logdet(theta)
        W = linalg.cho_solve((chol_new, True), eye)
        rel = float(np.max(np.abs(W - W_prev))) / max(float(np.max(np.abs(W_prev))), 1e-12)
        W_prev = W
        if rel < config.tolerance:
            if kkt_residual(theta, S, rho, config.penalize_diagonal,
                            config.zero_epsilon) <= max(10.0 * config.tolerance, 1e-12):
                converged = True
                break

    return PrecisionMatrix(
        gene_ids=gene_ids,
        theta=theta,
        rho_used=rho,
        converged=converged,
        iterations=it,
        objective_value=phi,
        objective_trace=tuple(trace),
    )


def write_precision(prec: PrecisionMatrix, path, zero_epsilon: float = 1e-8) -> None:
    """Sparse triplet export: header with gene count and rho, then gene_i gene_j theta_ij."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# genes=%d rho=%s converged=%d\n"
                 % (prec.p, repr(prec.rho_used), int(prec.converged)))
        for i in range(prec.p):
            for j in range(i, prec.p):
                v = prec.theta[i, j]
                if abs(v) >= zero_epsilon:
                    fh.write("%s\t%s\t%s\n" % (prec.gene_ids[i], prec.gene_ids[j], repr(float(v))))
