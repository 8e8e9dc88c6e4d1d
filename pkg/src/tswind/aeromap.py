"""Aerodynamic coefficient surfaces C_Q(lambda, beta) and C_T(lambda, beta).

Two interchangeable backends:

* :class:`TabularAeroMap` — bilinear interpolation on a rectangular grid,
  typically loaded from CSV (columns ``lambda,beta,cq,ct``).
* :class:`AnalyticAeroMap` — a closed-form exponential-in-1/lambda_i
  coefficient family, calibrated so max C_Q over lambda at beta = 0 equals
  CQ_MAX.

Torque coefficients are clamped to [CQ_MIN, CQ_MAX], thrust coefficients
to >= 0; query points are clamped to the surface's domain, so evaluation
never raises.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError

CQ_MIN = 0.001
CQ_MAX = 0.0751

# kernel backend tags
TAG_TABULAR = 0
TAG_ANALYTIC = 1


def _clamp(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


class TabularAeroMap:
    """Bilinear lookup of (C_Q, C_T) on a rectangular (lambda, beta) grid.

    Stored C_Q values are clamped into [CQ_MIN, CQ_MAX] and C_T to >= 0 at
    construction; queries outside the grid hull are clamped to the boundary.
    """

    backend = "tabular"

    def __init__(self, lam_grid, beta_grid, cq, ct):
        lam = np.asarray(lam_grid, dtype=float)
        beta = np.asarray(beta_grid, dtype=float)
        cq = np.asarray(cq, dtype=float)
        ct = np.asarray(ct, dtype=float)
        if lam.ndim != 1 or beta.ndim != 1 or lam.size < 2 or beta.size < 2:
            raise ValidationError("grid axes must be 1-D with >= 2 points")
        if np.any(np.diff(lam) <= 0) or np.any(np.diff(beta) <= 0):
            raise ValidationError("grid axes must be strictly increasing")
        if cq.shape != (lam.size, beta.size) or ct.shape != cq.shape:
            raise ValidationError("value arrays must be (n_lambda, n_beta)")
        if not (np.all(np.isfinite(cq)) and np.all(np.isfinite(ct))):
            raise ValidationError("aero map values must be finite")
        self.lam_grid = lam
        self.beta_grid = beta
        self.cq = np.clip(cq, CQ_MIN, CQ_MAX)
        self.ct = np.clip(ct, 0.0, None)

    def eval(self, lam: float, beta: float) -> tuple[float, float]:
        lg, bg = self.lam_grid, self.beta_grid
        lam = _clamp(lam, lg[0], lg[-1])
        beta = _clamp(beta, bg[0], bg[-1])
        i = int(np.searchsorted(lg, lam, side="right")) - 1
        j = int(np.searchsorted(bg, beta, side="right")) - 1
        i = min(max(i, 0), lg.size - 2)
        j = min(max(j, 0), bg.size - 2)
        s = (lam - lg[i]) / (lg[i + 1] - lg[i])
        t = (beta - bg[j]) / (bg[j + 1] - bg[j])
        out = []
        for z in (self.cq, self.ct):
            z00 = z[i, j]
            z10 = z[i + 1, j]
            z01 = z[i, j + 1]
            z11 = z[i + 1, j + 1]
            a = z00 + s * (z10 - z00)
            b = z01 + s * (z11 - z01)
            out.append(a + t * (b - a))
        cq = _clamp(out[0], CQ_MIN, CQ_MAX)
        ct = out[1] if out[1] > 0.0 else 0.0
        return cq, ct

    def pack(self):
        """Flat arrays for the simulation kernels."""
        return (
            TAG_TABULAR,
            np.ascontiguousarray(self.lam_grid),
            np.ascontiguousarray(self.beta_grid),
            np.ascontiguousarray(self.cq.reshape(-1)),
            np.ascontiguousarray(self.ct.reshape(-1)),
        )


class AnalyticAeroMap:
    """Closed-form coefficient surfaces.

    With u = 1/(lambda + 0.08 beta) - 0.035/(beta^3 + 1):

        C_Q = cq1*(cq2*u - cq3*beta - cq4)*exp(-cq5*u)/lambda + cq6
        C_T = ct1*(ct2*u - ct3*beta - ct4)*exp(-ct5*u) + ct6*lambda

    The default C_Q coefficients are calibrated so that the surface peaks at
    C_Q = CQ_MAX = 0.0751 for beta = 0, attained at LAMBDA_OPT.  The C_T
    companion fit is shaped for plausible thrust magnitudes only; it is not
    calibrated against any reference surface.  Queries are clamped to the
    fitted domain lambda in [0, 25], beta in [0, 45] degrees.
    """

    backend = "analytic"

    LAMBDA_OPT = 6.745137370408942   # argmax of C_Q(lambda, 0)

    CQ_COEF = (0.6009066350007123, 116.0, 0.4, 5.0, 21.0, 0.007894445745758972)
    CT_COEF = (0.30, 85.0, 0.35, 3.0, 9.8, 0.006)

    LAM_DOMAIN = (0.0, 25.0)
    BETA_DOMAIN = (0.0, 45.0)

    def __init__(self, cq_coef=None, ct_coef=None):
        self.cq_coef = tuple(float(c) for c in (cq_coef or self.CQ_COEF))
        self.ct_coef = tuple(float(c) for c in (ct_coef or self.CT_COEF))
        if len(self.cq_coef) != 6 or len(self.ct_coef) != 6:
            raise ValidationError("coefficient sets must have 6 entries")

    def eval(self, lam: float, beta: float) -> tuple[float, float]:
        lam = _clamp(lam, *self.LAM_DOMAIN)
        beta = _clamp(beta, *self.BETA_DOMAIN)
        denom = lam + 0.08 * beta
        # degenerate corner lambda = beta = 0: exponential term vanishes
        u = 1.0 / denom - 0.035 / (beta * beta * beta + 1.0) if denom > 1e-9 else 1e9
        e = math.exp(-self.cq_coef[4] * u) if u < 700.0 else 0.0
        q1, q2, q3, q4, _, q6 = self.cq_coef
        lam_safe = lam if lam > 1e-9 else 1e-9
        cq = q1 * (q2 * u - q3 * beta - q4) * e / lam_safe + q6
        t1, t2, t3, t4, t5, t6 = self.ct_coef
        et = math.exp(-t5 * u) if u < 700.0 else 0.0
        ct = t1 * (t2 * u - t3 * beta - t4) * et + t6 * lam
        cq = _clamp(cq, CQ_MIN, CQ_MAX)
        return cq, ct if ct > 0.0 else 0.0

    def pack(self):
        coef = np.array(
            self.cq_coef
            + self.ct_coef
            + (CQ_MIN, CQ_MAX)
            + self.LAM_DOMAIN
            + self.BETA_DOMAIN,
            dtype=float,
        )
        empty = np.zeros(0)
        return (TAG_ANALYTIC, coef, empty, empty, empty)


def load_aeromap_csv(path) -> TabularAeroMap:
    """Read a ``lambda,beta,cq,ct`` CSV into a tabular map.

    The rows must form a full rectangular grid sorted by (lambda, beta).
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().lower().replace(" ", "")
        if header != "lambda,beta,cq,ct":
            raise ValidationError(f"bad aero map header {header!r} in {path}")
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValidationError(f"{path}:{ln}: expected 4 columns")
            try:
                rows.append(tuple(float(p) for p in parts))
            except ValueError as exc:
                raise ValidationError(f"{path}:{ln}: {exc}") from None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    arr = np.array(rows)
    lam = np.unique(arr[:, 0])
    beta = np.unique(arr[:, 1])
    if lam.size * beta.size != arr.shape[0]:
        raise ValidationError(f"{path}: rows do not form a rectangular grid")
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    arr = arr[order]
    cq = arr[:, 2].reshape(lam.size, beta.size)
    ct = arr[:, 3].reshape(lam.size, beta.size)
    return TabularAeroMap(lam, beta, cq, ct)


def save_aeromap_csv(path, aeromap: TabularAeroMap) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("lambda,beta,cq,ct\n")
        for i, lam in enumerate(aeromap.lam_grid):
            for j, beta in enumerate(aeromap.beta_grid):
                fh.write(",".join(repr(float(v)) for v in
                                  (lam, beta, aeromap.cq[i, j], aeromap.ct[i, j]))
                         + "\n")


def tabulate(analytic: AnalyticAeroMap, lam_grid, beta_grid) -> TabularAeroMap:
    """Sample an analytic surface onto a grid (used to ship a default CSV)."""
    lam_grid = np.asarray(lam_grid, dtype=float)
    beta_grid = np.asarray(beta_grid, dtype=float)
    cq = np.empty((lam_grid.size, beta_grid.size))
    ct = np.empty_like(cq)
    for i, lam in enumerate(lam_grid):
        for j, beta in enumerate(beta_grid):
            cq[i, j], ct[i, j] = analytic.eval(lam, beta)
    return TabularAeroMap(lam_grid, beta_grid, cq, ct)
