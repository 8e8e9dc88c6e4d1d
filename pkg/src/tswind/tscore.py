"""Sector-nonlinearity decomposition of nonlinear state-space models.

A scalar nonlinearity f bounded on the operating domain by [f_min, f_max]
can be written as f = w1*f_max + w2*f_min with convex weights w1, w2.  A
model with N_l such nonlinearities becomes a convex blend of 2**N_l linear
vertex models; within the sector the blend reproduces the nonlinear model
exactly, not approximately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SectorBounds:
    """Extrema of one scalar nonlinearity over the modelled domain."""

    f_min: float
    f_max: float

    def __post_init__(self):
        if not (math.isfinite(self.f_min) and math.isfinite(self.f_max)):
            raise ValidationError("sector bounds must be finite")
        if not self.f_min < self.f_max:
            raise ValidationError(
                f"need f_min < f_max, got [{self.f_min}, {self.f_max}]"
            )


def sector_weights(f_value: float, bounds: SectorBounds) -> tuple[float, float]:
    """Convex weights (w1, w2) of f_value between the sector extrema.

    w1 weights the f_max vertex, w2 = 1 - w1 the f_min vertex.  The value
    is clamped into the sector first, so the weights stay in [0, 1] even
    when the premise leaves the design envelope.
    """
    f = min(max(f_value, bounds.f_min), bounds.f_max)
    w1 = (f - bounds.f_min) / (bounds.f_max - bounds.f_min)
    return w1, 1.0 - w1


@dataclass(frozen=True)
class TSSubmodel:
    """One linear vertex model of the blend."""

    A: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class TSModel:
    """Convex blend of linear submodels with sector membership functions.

    ``premise(x, extra)`` maps a state (plus optional exogenous premise
    inputs) to the current values of the scalar nonlinearities, one per
    entry of ``bounds``.  Submodel ordering: the index bits select one
    vertex per nonlinearity (most significant bit = first nonlinearity),
    a 0 bit picking the f_max vertex and a 1 bit the f_min vertex.
    """

    submodels: tuple[TSSubmodel, ...]
    bounds: tuple[SectorBounds, ...]
    premise: Callable[..., Sequence[float]]
    C: np.ndarray | None = None

    def __post_init__(self):
        n_l = len(self.bounds)
        if len(self.submodels) != 2 ** n_l:
            raise ValidationError(
                f"{len(self.submodels)} submodels for {n_l} nonlinearities; "
                f"expected {2 ** n_l}"
            )
        shapes = {(m.A.shape, m.B.shape) for m in self.submodels}
        if len(shapes) != 1:
            raise ValidationError("submodel matrix shapes are inconsistent")

    @property
    def n_rules(self) -> int:
        return len(self.submodels)

    def memberships(self, values: Sequence[float]) -> np.ndarray:
        """Membership vector h from the current nonlinearity values."""
        n_l = len(self.bounds)
        if len(values) != n_l:
            raise ValidationError("one premise value per nonlinearity required")
        pairs = [sector_weights(v, b) for v, b in zip(values, self.bounds)]
        h = np.empty(self.n_rules)
        for i in range(self.n_rules):
            w = 1.0
            for l in range(n_l):
                bit = (i >> (n_l - 1 - l)) & 1
                w *= pairs[l][bit]
            h[i] = w
        return h

    def memberships_at(self, x, extra=None) -> np.ndarray:
        return self.memberships(self.premise(x, extra))


def build_ts_model(bounds, vertex_fn, premise, C=None) -> TSModel:
    """Assemble all 2**N_l vertex models.

    ``vertex_fn(values)`` returns (A, B) for one tuple of vertex values,
    where each value is the f_max or f_min of the corresponding
    nonlinearity, in the same bit order as the membership product.
    """
    bounds = tuple(bounds)
    n_l = len(bounds)
    subs = []
    for i in range(2 ** n_l):
        vertex = tuple(
            bounds[l].f_max if ((i >> (n_l - 1 - l)) & 1) == 0 else bounds[l].f_min
            for l in range(n_l)
        )
        A, B = vertex_fn(vertex)
        subs.append(TSSubmodel(np.asarray(A, float), np.asarray(B, float)))
    return TSModel(tuple(subs), bounds, premise, C=None if C is None else np.asarray(C, float))


def ts_blend(model: TSModel, h) -> tuple[np.ndarray, np.ndarray]:
    """Membership-weighted combination of the vertex matrices."""
    h = np.asarray(h, dtype=float)
    if h.shape != (model.n_rules,):
        raise ValidationError(
            f"membership vector has length {h.size}, expected {model.n_rules}"
        )
    if abs(h.sum() - 1.0) > 1e-12:
        raise ValidationError(f"memberships sum to {h.sum()!r}, not 1")
    A = sum(hi * m.A for hi, m in zip(h, model.submodels))
    B = sum(hi * m.B for hi, m in zip(h, model.submodels))
    return A, B


# --- pendulum fixture -------------------------------------------------------

def pendulum_nonlinearity(x1: float, g: float, l: float) -> float:
    """-(g/l) * sin(x1)/x1 with the removable singularity filled in."""
    if x1 == 0.0:
        return -g / l
    return -(g / l) * math.sin(x1) / x1


def pendulum_system_matrix(x1: float, g: float, l: float) -> np.ndarray:
    """Nonlinear A(x) of the driven point-mass pendulum."""
    return np.array([[0.0, 1.0], [pendulum_nonlinearity(x1, g, l), 0.0]])


def build_pendulum_model(m: float, l: float, g: float = 9.81,
                         domain: tuple[float, float] = (-math.pi, math.pi)) -> TSModel:
    """Two-rule sector model of a torque-driven pendulum.

    State (angle, angular rate), input the drive torque.  On the default
    domain the sector extrema are available in closed form: the
    nonlinearity -(g/l) sin(x)/x runs from -g/l (at x = 0) up to 0 (at
    x = +-pi).  Other domains are handled by dense sampling.
    """
    if m <= 0 or l <= 0:
        raise ValidationError("pendulum mass and length must be > 0")
    lo, hi = domain
    if not lo < hi:
        raise ValidationError("empty pendulum domain")
    if (lo, hi) == (-math.pi, math.pi):
        bounds = SectorBounds(-g / l, 0.0)
    else:
        xs = np.linspace(lo, hi, 40001)
        vals = [pendulum_nonlinearity(x, g, l) for x in xs]
        bounds = SectorBounds(min(vals), max(vals))

    B = np.array([[0.0], [1.0 / (m * l * l)]])

    def vertex(values):
        (f,) = values
        return np.array([[0.0, 1.0], [f, 0.0]]), B

    def premise(x, extra=None):
        return (pendulum_nonlinearity(float(x[0]), g, l),)

    return build_ts_model([bounds], vertex, premise, C=np.eye(2))


def exactness_check(model: TSModel, matrix_fn, states, extras=None) -> float:
    """Largest relative deviation between blended and nonlinear A.

    ``matrix_fn(x, extra)`` evaluates the true nonlinear system matrix;
    deviation is measured in the max-abs norm, relative to the nonlinear
    matrix.  The sector construction makes this zero (to rounding) inside
    the sector.
    """
    worst = 0.0
    for k, x in enumerate(states):
        extra = None if extras is None else extras[k]
        h = model.memberships_at(x, extra)
        A_blend, _ = ts_blend(model, h)
        A_true = np.asarray(matrix_fn(x, extra), dtype=float)
        denom = np.max(np.abs(A_true))
        if denom == 0.0:
            dev = np.max(np.abs(A_blend - A_true))
        else:
            dev = np.max(np.abs(A_blend - A_true)) / denom
        worst = max(worst, dev)
    return worst
