"""Tower eigenfrequency and equivalent stiffness chain.

A segmented cantilever (clamped base, lumped top mass) is reduced to a
single translational spring in three steps: the first bending
eigenfrequency from a transfer-matrix sweep, an equivalent uniform-beam
bending stiffness from that frequency, and finally the equivalent tip
spring constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import NumericalError, ValidationError

# first-mode wavenumber-like constant of the equivalent uniform beam [1/m]
KAPPA1 = 1.423e-2

DEFAULT_TOWER_RESOURCE = "tower_5mw.csv"


@dataclass(frozen=True)
class BeamSegment:
    """Uniform beam piece: length [m], mass/length [kg/m], EI [N m^2]."""

    length: float
    mu: float
    EI: float

    def __post_init__(self):
        if self.length <= 0 or self.mu <= 0 or self.EI <= 0:
            raise ValidationError("segment length, mu and EI must be > 0")


@dataclass(frozen=True)
class TowerModel:
    """Ordered segments from base to top plus the lumped top mass [kg]."""

    segments: tuple[BeamSegment, ...]
    tip_mass: float = 0.0

    def __post_init__(self):
        if len(self.segments) < 1:
            raise ValidationError("tower needs at least one segment")
        if self.tip_mass < 0:
            raise ValidationError("tip mass must be >= 0")

    @property
    def length(self) -> float:
        return sum(s.length for s in self.segments)

    @property
    def mass(self) -> float:
        return sum(s.length * s.mu for s in self.segments)

    @property
    def mu_total(self) -> float:
        return self.mass / self.length


def segment_transfer_matrix(seg: BeamSegment, omega: float) -> np.ndarray:
    """Propagate (w, w', M, Q) across one uniform segment at frequency omega.

    Uses the half-sum/half-difference combinations of cosh/cos and
    sinh/sin; M = EI w'' and Q = EI w''' so that moment and shear stay
    continuous across segment boundaries with jumping EI.
    """
    b = (seg.mu * omega * omega / seg.EI) ** 0.25
    x = b * seg.length
    S = 0.5 * (math.cosh(x) + math.cos(x))
    T = 0.5 * (math.sinh(x) + math.sin(x))
    U = 0.5 * (math.cosh(x) - math.cos(x))
    V = 0.5 * (math.sinh(x) - math.sin(x))
    EI = seg.EI
    return np.array([
        [S, T / b, U / (b * b * EI), V / (b * b * b * EI)],
        [b * V, S, T / (b * EI), U / (b * b * EI)],
        [EI * b * b * U, EI * b * V, S, T / b],
        [EI * b * b * b * T, EI * b * b * U, b * V, S],
    ])


def clamped_free_determinant(tower: TowerModel, omega: float) -> float:
    """Boundary determinant whose roots are the eigenfrequencies.

    Base clamped (w = w' = 0), top free with the lumped mass entering the
    shear balance: M_top = 0 and Q_top + m w^2 w_top = 0.
    """
    Phi = np.eye(4)
    for seg in tower.segments:
        Phi = segment_transfer_matrix(seg, omega) @ Phi
    mw2 = tower.tip_mass * omega * omega
    a11, a12 = Phi[2, 2], Phi[2, 3]
    a21 = Phi[3, 2] + mw2 * Phi[0, 2]
    a22 = Phi[3, 3] + mw2 * Phi[0, 3]
    return a11 * a22 - a12 * a21


def first_eigenfrequency(tower: TowerModel, lo: float = 0.1, hi: float = 50.0,
                         scan_points: int = 2000, tol: float = 1e-6) -> float:
    """Smallest root of the boundary determinant in [lo, hi] rad/s.

    The determinant is entire in omega, so a sign change over a refined
    scan is a genuine bracket; bisection then converges unconditionally.
    Raises NumericalError when no sign change exists in the range.
    """
    omegas = np.linspace(lo, hi, scan_points + 1)
    d_prev = clamped_free_determinant(tower, omegas[0])
    for k in range(1, omegas.size):
        d_k = clamped_free_determinant(tower, omegas[k])
        if d_prev == 0.0:
            return float(omegas[k - 1])
        if d_prev * d_k < 0.0:
            # validate the bracket at 10x resolution to reject scan artifacts
            fine = np.linspace(omegas[k - 1], omegas[k], 11)
            fd = [clamped_free_determinant(tower, w) for w in fine]
            a, b = omegas[k - 1], omegas[k]
            fa = d_prev
            for j in range(1, len(fine)):
                if fd[j - 1] * fd[j] < 0.0:
                    a, b, fa = fine[j - 1], fine[j], fd[j - 1]
                    break
            while b - a > tol:
                m = 0.5 * (a + b)
                fm = clamped_free_determinant(tower, m)
                if fm == 0.0:
                    return float(m)
                if fa * fm < 0.0:
                    b = m
                else:
                    a, fa = m, fm
            return float(0.5 * (a + b))
        d_prev = d_k
    raise NumericalError(
        f"no bending eigenfrequency found in [{lo}, {hi}] rad/s"
    )


def equivalent_bending_stiffness(omega1: float, mu_total: float,
                                 kappa1: float = KAPPA1) -> float:
    """Uniform-beam bending stiffness reproducing the first frequency:
    omega1^2 * mu_total / kappa1^4."""
    if mu_total <= 0 or kappa1 <= 0 or omega1 < 0:
        raise ValidationError("mu_total and kappa1 must be > 0, omega1 >= 0")
    return omega1 * omega1 * mu_total / kappa1 ** 4


def equivalent_spring_stiffness(B_total: float, length: float) -> float:
    """Tip spring constant of a clamped beam under a tip load: 3 B / l^3."""
    if length <= 0:
        raise ValidationError("length must be > 0")
    return 3.0 * B_total / length ** 3


def stiffness_chain(tower: TowerModel,
                    kappa1: float = KAPPA1) -> tuple[float, float, float]:
    """(omega1, B_total, k) for a tower model in one call."""
    omega1 = first_eigenfrequency(tower)
    B_total = equivalent_bending_stiffness(omega1, tower.mu_total, kappa1)
    return omega1, B_total, equivalent_spring_stiffness(B_total, tower.length)


# --- tower description files ------------------------------------------------

def load_tower_file(path) -> TowerModel:
    """CSV with a ``tipmass,<kg>`` line followed by ``length,mu,EI`` rows.

    An optional literal ``length,mu,EI`` column-header row is accepted.
    Lines starting with '#' are comments.
    """
    tip_mass = None
    segments = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            low = line.lower().replace(" ", "")
            if low.startswith("tipmass,"):
                if tip_mass is not None:
                    raise ValidationError(f"{path}:{ln}: duplicate tipmass line")
                try:
                    tip_mass = float(low.split(",", 1)[1])
                except ValueError as exc:
                    raise ValidationError(f"{path}:{ln}: {exc}") from None
                continue
            if low == "length,mu,ei":
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValidationError(f"{path}:{ln}: expected length,mu,EI")
            try:
                segments.append(BeamSegment(*(float(p) for p in parts)))
            except ValueError as exc:
                raise ValidationError(f"{path}:{ln}: {exc}") from None
    if tip_mass is None:
        raise ValidationError(f"{path}: missing tipmass line")
    if not segments:
        raise ValidationError(f"{path}: no segment rows")
    return TowerModel(tuple(segments), tip_mass)


def save_tower_file(path, tower: TowerModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"tipmass,{float(tower.tip_mass)!r}\n")
        fh.write("length,mu,EI\n")
        for s in tower.segments:
            fh.write(",".join(repr(float(v)) for v in (s.length, s.mu, s.EI))
                     + "\n")


def default_tower() -> TowerModel:
    """The packaged 11-segment 5 MW tower description."""
    ref = resources.files("tswind.data").joinpath(DEFAULT_TOWER_RESOURCE)
    with resources.as_file(ref) as path:
        return load_tower_file(path)
