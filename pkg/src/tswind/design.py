"""Observer gain synthesis and quadratic stability certificates.

Gains come from a stationary Riccati design on the dual system pair
(A^T, C^T) with diagonal weights normalized by the expected signal maxima,
solved once for the vertex-averaged model by default (or once per vertex
on request).  Certificates are checked numerically via symmetric
eigenvalue tests; the conservative two-inequality condition for
premise-mismatched blends is evaluated over a grid of candidate (Q, P).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .errors import CareSolverError, ValidationError
from .tscore import TSModel
from .wind import SplitMix64

# margin for every strict definiteness / Hurwitz decision
EPS_DEFINITE = 1e-9

# default synthesis weights: diagonal state weights W1..W4 for
# (theta_s, omega_r, omega_g, v) and output weights R1..R3 for the
# measured (theta_s, omega_r, omega_g), normalized by expected maxima
DEFAULT_STATE_WEIGHTS = (0.25, 15.708, 1.5708, 60e7)
DEFAULT_OUTPUT_WEIGHTS = (0.05, 0.1571, 1.5708)
DEFAULT_NORMALIZERS = (0.01, 15.0 * math.pi / 30.0, 15.0 * math.pi / 30.0, 60.0)


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def is_hurwitz(M, eps: float = EPS_DEFINITE) -> bool:
    """True iff every eigenvalue real part is below -eps."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("matrix must be square")
    return bool(np.max(np.linalg.eigvals(M).real) < -eps)


def lyapunov_negativity_check(P, A_list, eps: float = EPS_DEFINITE) -> bool:
    """True iff P > 0 and A^T P + P A < 0 for every listed A."""
    P = np.asarray(P, dtype=float)
    if not np.allclose(P, P.T, rtol=0.0, atol=1e-10):
        raise ValidationError("P must be symmetric")
    if np.min(np.linalg.eigvalsh(P)) <= eps:
        return False
    for A in A_list:
        A = np.asarray(A, dtype=float)
        if np.max(np.linalg.eigvalsh(A.T @ P + P @ A)) >= -eps:
            return False
    return True


@dataclass(frozen=True)
class StabilityCertificate:
    """Candidate quadratic certificate (P, Q, mu) for the error dynamics."""

    P: np.ndarray
    Q: np.ndarray
    mu: float

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        if P.shape != Q.shape or P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValidationError("P and Q must be square and equally sized")
        if not (np.allclose(P, P.T, atol=1e-10) and np.allclose(Q, Q.T, atol=1e-10)):
            raise ValidationError("P and Q must be symmetric")
        if np.min(np.linalg.eigvalsh(P)) <= 0 or np.min(np.linalg.eigvalsh(Q)) <= 0:
            raise ValidationError("P and Q must be positive definite")
        if self.mu < 0 or not math.isfinite(self.mu):
            raise ValidationError("mu must be finite and >= 0")


def observer_lmi_check(cert: StabilityCertificate, A_list, L_list, C,
                       eps: float = EPS_DEFINITE) -> bool:
    """Evaluate the two-part certificate condition.

    Part one, per vertex: sym(P (A_i - L_i C)) + Q must be negative
    semidefinite.  Part two: the block matrix [[Q - mu^2 I, P], [P, I]]
    must be strictly positive definite.  Both are decided by symmetric
    eigenvalue tests with margin ``eps``.
    """
    P = np.asarray(cert.P, dtype=float)
    Q = np.asarray(cert.Q, dtype=float)
    C = np.asarray(C, dtype=float)
    n = P.shape[0]
    if len(A_list) != len(L_list):
        raise ValidationError("need one gain per vertex matrix")
    for A, L in zip(A_list, L_list):
        A = np.asarray(A, dtype=float)
        L = np.asarray(L, dtype=float)
        if A.shape != (n, n) or L.shape[0] != n or C.shape[1] != n:
            raise ValidationError("dimension mismatch in certificate check")
        S = P @ (A - L @ C)
        if np.max(np.linalg.eigvalsh(S + S.T + Q)) > eps:
            return False
    block = np.block([[Q - cert.mu ** 2 * np.eye(n), P],
                      [P, np.eye(n)]])
    return bool(np.min(np.linalg.eigvalsh(block)) > eps)


def estimate_mismatch_bound(model: TSModel, state_box, input_box,
                            n_samples: int = 10000, seed: int = 0,
                            extra_box=None) -> float:
    """Monte-Carlo lower bound on the premise-mismatch gain mu.

    Samples pairs of states (x, x_hat) from ``state_box`` and inputs from
    ``input_box``, evaluates the blend discrepancy between the two
    membership vectors, and returns the largest ratio against the state
    error norm.  Zero-error pairs are skipped.  Samples are drawn as
    common random numbers scaled by the box half-widths, so growing a box
    rescales the same sample set instead of drawing an unrelated one.
    """
    state_box = np.asarray(state_box, dtype=float)
    input_box = np.asarray(input_box, dtype=float)
    if np.any(state_box[:, 1] <= state_box[:, 0]):
        raise ValidationError("degenerate state box")
    rng = SplitMix64(seed)

    def draw(box):
        c = 0.5 * (box[:, 1] + box[:, 0])
        half = 0.5 * (box[:, 1] - box[:, 0])
        r = np.array([2.0 * rng.uniform() - 1.0 for _ in range(box.shape[0])])
        return c + r * half

    best = 0.0
    for _ in range(n_samples):
        x = draw(state_box)
        x_hat = draw(state_box)
        u = draw(input_box) if input_box.size else np.zeros(0)
        extra = draw(np.asarray(extra_box, dtype=float)) if extra_box is not None else None
        err = np.linalg.norm(x - x_hat)
        if err == 0.0:
            continue
        h = model.memberships_at(x, extra)
        h_hat = model.memberships_at(x_hat, extra)
        dA = sum((hi - hj) * m.A for hi, hj, m in zip(h, h_hat, model.submodels))
        dB = sum((hi - hj) * m.B for hi, hj, m in zip(h, h_hat, model.submodels))
        delta = np.linalg.norm(dA @ x + (dB @ u if u.size else 0.0))
        best = max(best, delta / err)
    return best


def care_residual(A, B, Q, R, P) -> float:
    """Max-abs residual of A^T P + P A - P B R^-1 B^T P + Q."""
    A, B, Q, R, P = (np.asarray(M, dtype=float) for M in (A, B, Q, R, P))
    return float(np.max(np.abs(
        A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q
    )))


def care_solve(A, B, Q, R, max_iter: int = 200, tol: float = 1e-10,
               res_limit: float = 1e-8) -> np.ndarray:
    """Stabilizing solution of the continuous algebraic Riccati equation.

    Newton iteration on the gain (each step one Lyapunov solve), started
    from K0 = sigma B^T with sigma doubled until A - sigma B B^T is
    Hurwitz.  Near convergence the residual bounces around the rounding
    floor of the Lyapunov solves, so the best iterate is tracked; the
    target is ``tol`` but any best residual within ``res_limit`` counts
    as converged.  Raises :class:`CareSolverError` (with the residual
    attached) when either the start-up shift or the iteration fails.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n = A.shape[0]
    if A.shape != (n, n) or Q.shape != (n, n) or B.shape[0] != n:
        raise ValidationError("inconsistent CARE dimensions")
    if np.min(np.linalg.eigvalsh(_sym(R))) <= 0:
        raise ValidationError("R must be positive definite")
    if np.min(np.linalg.eigvalsh(_sym(Q))) < -1e-10:
        raise ValidationError("Q must be positive semidefinite")

    K = np.zeros((B.shape[1], n))
    if not is_hurwitz(A):
        sigma = 1.0
        while sigma < 2.0 ** 64:
            K = sigma * B.T
            if is_hurwitz(A - B @ K):
                break
            sigma *= 2.0
        else:
            raise CareSolverError(
                "could not find a stabilizing start gain by output shifting"
            )

    best_X = None
    best_res = math.inf
    stalled = 0
    for _ in range(max_iter):
        Acl = A - B @ K
        X = _sym(solve_continuous_lyapunov(Acl.T, -(Q + K.T @ R @ K)))
        residual = care_residual(A, B, Q, R, X)
        if residual < best_res:
            best_X, best_res = X, residual
            stalled = 0
        else:
            stalled += 1
        if best_res < tol:
            return best_X
        if stalled >= 20:
            break
        K = np.linalg.solve(R, B.T @ X)
    if best_X is not None and best_res <= res_limit:
        return best_X
    raise CareSolverError(
        f"Riccati iteration did not reach {res_limit:g} "
        f"(best residual {best_res:.3e})", residual=best_res,
    )


@dataclass(frozen=True)
class DesignWeights:
    """Normalized diagonal weight matrices for the dual-system design."""

    W: np.ndarray
    R_w: np.ndarray
    state_weights: tuple
    output_weights: tuple
    normalizers: tuple


def build_weight_matrices(state_weights=DEFAULT_STATE_WEIGHTS,
                          output_weights=DEFAULT_OUTPUT_WEIGHTS,
                          normalizers=DEFAULT_NORMALIZERS) -> DesignWeights:
    """Diagonal weights W_k / max_k^2; outputs reuse the first three maxima."""
    sw = tuple(float(w) for w in state_weights)
    ow = tuple(float(w) for w in output_weights)
    nz = tuple(float(m) for m in normalizers)
    if len(sw) != 4 or len(ow) != 3 or len(nz) != 4:
        raise ValidationError("need 4 state weights, 3 output weights, 4 maxima")
    if any(w <= 0 for w in sw + ow + nz):
        raise ValidationError("weights and normalizers must be > 0")
    W = np.diag([sw[k] / nz[k] ** 2 for k in range(4)])
    R_w = np.diag([ow[k] / nz[k] ** 2 for k in range(3)])
    return DesignWeights(W=W, R_w=R_w, state_weights=sw,
                         output_weights=ow, normalizers=nz)


@dataclass(frozen=True)
class GainDesign:
    """Synthesized gains plus the Riccati byproducts for reporting."""

    L: tuple[np.ndarray, ...]
    P: tuple[np.ndarray, ...]
    residuals: tuple[float, ...]


def synthesize_gains(A_list, C, weights: DesignWeights,
                     per_vertex: bool = False) -> GainDesign:
    """Dual-system Riccati design of the correction gains.

    Gains are obtained on the dual pairs (A_i^T, C^T) with state weight W
    and control weight R_w; the state-feedback solution transposes back
    into a correction gain, and every closed loop A_i - L_i C is verified
    Hurwitz.

    By default one Riccati equation is solved for the vertex-averaged
    matrix, which (B being shared) is exactly the average of the vertex
    equations; the common solution yields one gain for all vertices, the
    coupled-certificate behaviour expected of a blended design.  With
    ``per_vertex=True`` each vertex is solved independently instead; note
    that the correction of any state whose coupling vanishes at a vertex
    (here the wind estimate at the low sector bound) then collapses at
    that vertex, so the per-vertex gains can differ wildly.
    """
    C = np.asarray(C, dtype=float)
    A_list = [np.asarray(A, dtype=float) for A in A_list]
    Ls, Ps, res = [], [], []
    if per_vertex:
        for i, A in enumerate(A_list):
            try:
                P = care_solve(A.T, C.T, weights.W, weights.R_w)
            except CareSolverError as exc:
                raise CareSolverError(
                    f"vertex {i}: {exc}", residual=exc.residual) from exc
            Ls.append(np.linalg.solve(weights.R_w, C @ P).T)
            Ps.append(P)
            res.append(care_residual(A.T, C.T, weights.W, weights.R_w, P))
    else:
        Abar = sum(A_list) / len(A_list)
        P = care_solve(Abar.T, C.T, weights.W, weights.R_w)
        L = np.linalg.solve(weights.R_w, C @ P).T
        r = care_residual(Abar.T, C.T, weights.W, weights.R_w, P)
        for _ in A_list:
            Ls.append(L.copy())
            Ps.append(P)
            res.append(r)
    for i, (A, L) in enumerate(zip(A_list, Ls)):
        if not is_hurwitz(A - L @ C):
            raise CareSolverError(f"vertex {i}: designed loop is not Hurwitz")
    return GainDesign(L=tuple(Ls), P=tuple(Ps), residuals=tuple(res))


@dataclass(frozen=True)
class CertificateSearch:
    """Outcome of the grid search for a quadratic certificate."""

    feasible: bool
    mu: float
    certificate: StabilityCertificate | None
    tried: int


def quadratic_certificate_search(A_list, L_list, C, mu,
                                 q_grid=None) -> CertificateSearch:
    """Scan Q = q I candidates for a certificate passing both inequalities.

    For each q the common P is taken from the Lyapunov equation of the
    averaged closed loop with right-hand side -Q.  This deliberately
    modest search mirrors how conservative the two-inequality condition
    is in practice; an exhaustive semidefinite search is out of scope.
    """
    C = np.asarray(C, dtype=float)
    if q_grid is None:
        q_grid = np.logspace(-4.0, 4.0, 33)
    closed = [np.asarray(A, float) - np.asarray(L, float) @ C
              for A, L in zip(A_list, L_list)]
    Abar = sum(closed) / len(closed)
    n = Abar.shape[0]
    tried = 0
    for q in q_grid:
        Q = q * np.eye(n)
        P = _sym(solve_continuous_lyapunov(Abar.T, -Q))
        if np.min(np.linalg.eigvalsh(P)) <= 0:
            continue
        tried += 1
        cert = StabilityCertificate(P=P, Q=Q, mu=float(mu))
        if observer_lmi_check(cert, A_list, L_list, C):
            return CertificateSearch(True, float(mu), cert, tried)
    return CertificateSearch(False, float(mu), None, tried)


def format_design_report(weights: DesignWeights, design: GainDesign,
                         A_list, C) -> str:
    """Plain-text dump of weights, residuals, gains and loop eigenvalues."""
    C = np.asarray(C, dtype=float)
    lines = ["gain design report", "==================", ""]
    lines.append("state weight matrix W (diagonal):")
    lines.append("  " + "  ".join(f"{v:.6g}" for v in np.diag(weights.W)))
    lines.append("output weight matrix R (diagonal):")
    lines.append("  " + "  ".join(f"{v:.6g}" for v in np.diag(weights.R_w)))
    lines.append("normalizing maxima: "
                 + "  ".join(f"{v:.6g}" for v in weights.normalizers))
    lines.append("assumed initial estimation error: 0 (informational only; "
                 "not used by the stationary Riccati design)")
    for i, (L, P, r) in enumerate(zip(design.L, design.P, design.residuals)):
        lines.append("")
        lines.append(f"vertex {i + 1}:")
        lines.append(f"  Riccati residual (max-abs): {r:.3e}")
        lines.append("  gain L:")
        for row in L:
            lines.append("    " + "  ".join(f"{v: .6e}" for v in row))
        eig = np.linalg.eigvals(np.asarray(A_list[i], float) - L @ C)
        lines.append("  closed-loop eigenvalues:")
        lines.append("    " + "  ".join(
            f"{e.real:.4f}{e.imag:+.4f}j" for e in np.sort_complex(eig)))
    return "\n".join(lines) + "\n"
