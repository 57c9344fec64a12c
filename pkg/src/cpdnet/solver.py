"""Operating-point solver: damped Newton with decomposition-informed
initialization and deterministic multi-start, plus the exact two-port
closed form.

The solved system is diag(V)*G*V = P.  Its Jacobian diag(GV) + diag(V)G
is exactly singular on the uniform ray (G maps ones to zero), so starts
are never uniform and every step is safeguarded by a condition estimate
and a backtracking line search.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .certificates import certificate_spectral
from .decomposition import decompose_power, decompose_voltage, residual_full
from .errors import EqualPowers, JacobianSingular, NonpositiveConductance
from .network import ConductanceMatrix
from .spectral import SpectralSummary, laplacian_spectrum

logger = logging.getLogger(__name__)

_DEDUP_RTOL = 1e-6
_DIVERGENCE_FACTOR = 1e12


class Feasibility(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE_NEGATIVE_LOSSES = "infeasible_negative_losses"


@dataclass
class SolverOptions:
    """Knobs for the multi-start Newton solver.

    ``tol_watts`` defaults to a scale-aware 1e-9 * max(1, max|P|).
    Randomness is derived per start from (seed, start index), so results
    do not depend on execution order.
    """

    tol_watts: float | None = None
    max_iter: int = 50
    n_starts: int = 8
    damping_max_halvings: int = 30
    cond_limit: float = 1e14
    seed: int = 0

    def __post_init__(self):
        if self.tol_watts is not None and not self.tol_watts > 0:
            raise ValueError("tol_watts must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def resolve_tol(self, injections: np.ndarray) -> float:
        if self.tol_watts is not None:
            return self.tol_watts
        return 1e-9 * max(1.0, float(np.abs(injections).max(initial=0.0)))


@dataclass(frozen=True)
class OperatingPoint:
    """A solution of diag(V)*G*V = P together with its decomposition.

    ``degenerate_family`` marks the representative of the uniform-voltage
    family that exists when all injections are exactly zero; the reported
    vector is then one member of a continuum, not an isolated solution.
    """

    v: np.ndarray
    v0: float
    deviation: np.ndarray
    residual_norm: float
    iterations: int
    start_index: int
    degenerate_family: bool = False

    @property
    def deviation_inf(self) -> float:
        return float(np.abs(self.deviation).max(initial=0.0))


@dataclass(frozen=True)
class NoHighVoltageSolution:
    """Two-port existence condition failed; ``ratio`` is loss over transfer."""

    ratio: float
    reason: str


def feasibility_precheck(injections: np.ndarray) -> Feasibility:
    """Reject instances whose net injected power is negative.

    A resistive network must dissipate: total injections below zero admit
    no operating point at all.  FEASIBLE does not guarantee existence.
    """
    if float(np.asarray(injections, dtype=float).sum()) < 0.0:
        return Feasibility.INFEASIBLE_NEGATIVE_LOSSES
    return Feasibility.FEASIBLE


def _jacobian(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    gv = g @ v
    return np.diag(gv) + v[:, None] * g


def newton_step(matrix, injections: np.ndarray, voltages: np.ndarray) -> np.ndarray:
    """One damped Newton step; returns the next iterate.

    The full step is scaled back by halving until the 2-norm of the
    residual decreases.  Raises JacobianSingular when the Jacobian is
    singular, its condition estimate exceeds 1e14, or no damping produces
    a decrease (the usual symptom of a near-singular Jacobian).
    """
    g = matrix.matrix if isinstance(matrix, ConductanceMatrix) else np.asarray(matrix, dtype=float)
    v = np.asarray(voltages, dtype=float)
    p = np.asarray(injections, dtype=float)

    residual = v * (g @ v) - p
    norm = float(np.linalg.norm(residual))
    if norm == 0.0:
        return v.copy()

    jac = _jacobian(g, v)
    if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > 1e14:
        raise JacobianSingular("Jacobian condition estimate exceeds limit")
    try:
        step = np.linalg.solve(jac, residual)
    except np.linalg.LinAlgError as exc:
        raise JacobianSingular("Jacobian is exactly singular") from exc

    alpha = 1.0
    for _ in range(31):
        candidate = v - alpha * step
        if float(np.linalg.norm(candidate * (g @ candidate) - p)) < norm:
            return candidate
        alpha *= 0.5
    raise JacobianSingular("no damping factor reduced the residual")


def _start_factor(start_index: int) -> float:
    if start_index == 0:
        return 1.0
    if start_index == 1:
        return 0.5
    return 2.0 ** (start_index - 1)


def _perturbation(n: int, seed: int, start_index: int) -> np.ndarray:
    rng = np.random.default_rng([seed, start_index])
    raw = rng.standard_normal(n)
    raw -= raw.mean()
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        return np.zeros(n)
    return 0.1 * raw / norm


def _initial_guesses(
    g: np.ndarray,
    summary: SpectralSummary,
    injections: np.ndarray,
    options: SolverOptions,
) -> list[np.ndarray]:
    pd = decompose_power(injections)
    v0_base = math.sqrt(max(pd.transfer_norm2, abs(pd.loss), 1.0) / summary.lambda2)
    cert = certificate_spectral(summary, pd)
    if cert.applicable:
        v0_base = max(v0_base, cert.v_min)

    x_base = np.linalg.pinv(g) @ pd.transfer / (v0_base * v0_base)
    if float(np.abs(x_base).max(initial=0.0)) < 1e-12:
        # Uniform start would make the Jacobian singular; nudge off the ray.
        x_base = _perturbation(g.shape[0], options.seed, 0)

    guesses = []
    for k in range(options.n_starts):
        v0_k = v0_base * _start_factor(k)
        x_k = x_base if k == 0 else x_base + _perturbation(g.shape[0], options.seed, k)
        guesses.append(v0_k * (1.0 + x_k))
    return guesses


def _newton_run(
    g: np.ndarray, injections: np.ndarray, v: np.ndarray, tol: float, options: SolverOptions
) -> tuple[np.ndarray, int] | None:
    initial_norm = float(np.linalg.norm(v * (g @ v) - injections))
    for iteration in range(options.max_iter + 1):
        residual = v * (g @ v) - injections
        if float(np.abs(residual).max(initial=0.0)) <= tol:
            return v, iteration
        if iteration == options.max_iter:
            return None
        norm = float(np.linalg.norm(residual))
        if not math.isfinite(norm) or norm > _DIVERGENCE_FACTOR * (initial_norm + 1.0):
            return None

        jac = _jacobian(g, v)
        if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > options.cond_limit:
            raise JacobianSingular("Jacobian condition estimate exceeds limit")
        try:
            step = np.linalg.solve(jac, residual)
        except np.linalg.LinAlgError as exc:
            raise JacobianSingular("Jacobian is exactly singular") from exc

        alpha = 1.0
        improved = None
        for _ in range(options.damping_max_halvings + 1):
            candidate = v - alpha * step
            if float(np.linalg.norm(candidate * (g @ candidate) - injections)) < norm:
                improved = candidate
                break
            alpha *= 0.5
        if improved is None:
            return None
        v = improved
    return None


def _merge_duplicates(points: list[OperatingPoint]) -> list[OperatingPoint]:
    kept: list[OperatingPoint] = []
    for point in points:
        matched = False
        for i, other in enumerate(kept):
            scale = max(
                float(np.abs(point.v).max(initial=0.0)),
                float(np.abs(other.v).max(initial=0.0)),
            )
            if float(np.abs(point.v - other.v).max(initial=0.0)) <= _DEDUP_RTOL * scale:
                if point.residual_norm < other.residual_norm:
                    kept[i] = point
                matched = True
                break
        if not matched:
            kept.append(point)
    return kept


def solve_operating_point(
    matrix, injections: np.ndarray, options: SolverOptions | None = None
) -> list[OperatingPoint]:
    """Find operating points by damped Newton from multiple starts.

    Returns converged points with positive mean voltage, deduplicated and
    sorted by descending mean voltage (ties broken lexicographically on
    the voltage vector).  An empty list means no start converged; it is
    not a proof that no solution exists.  Instances with negative total
    power are rejected by the feasibility precheck without any Newton
    work.  All-zero injections yield the degenerate uniform family marker
    instead of an arbitrary representative being passed off as unique.
    """
    options = options or SolverOptions()
    cm = (
        matrix
        if isinstance(matrix, ConductanceMatrix)
        else ConductanceMatrix(np.asarray(matrix, dtype=float), [str(i) for i in range(len(injections))])
    )
    g = cm.matrix
    p = np.asarray(injections, dtype=float)
    n = g.shape[0]
    if p.shape != (n,):
        raise ValueError(f"injection vector has shape {p.shape}, expected ({n},)")
    tol = options.resolve_tol(p)

    if np.all(p == 0.0):
        ones = np.ones(n)
        return [
            OperatingPoint(
                v=ones,
                v0=1.0,
                deviation=np.zeros(n),
                residual_norm=0.0,
                iterations=0,
                start_index=-1,
                degenerate_family=True,
            )
        ]
    if feasibility_precheck(p) is not Feasibility.FEASIBLE:
        return []

    summary = laplacian_spectrum(cm)
    candidates: list[OperatingPoint] = []
    for start_index, v_start in enumerate(_initial_guesses(g, summary, p, options)):
        try:
            outcome = _newton_run(g, p, v_start, tol, options)
        except JacobianSingular as exc:
            logger.debug("start %d abandoned: %s", start_index, exc)
            continue
        if outcome is None:
            continue
        v, iterations = outcome
        mean = float(v.mean())
        if mean == 0.0:
            continue
        if mean < 0.0:
            # Sign-flipped twins solve the same equations; report the
            # positive-mean representative.
            v = -v
        vd = decompose_voltage(v)
        candidates.append(
            OperatingPoint(
                v=v,
                v0=vd.v0,
                deviation=vd.deviation,
                residual_norm=float(np.abs(residual_full(g, p, v)).max()),
                iterations=iterations,
                start_index=start_index,
            )
        )

    unique = _merge_duplicates(candidates)
    unique.sort(key=lambda op: (-op.v0, tuple(op.v)))
    return unique


def two_port_solve(g: float, p1: float, p2: float) -> OperatingPoint | NoHighVoltageSolution:
    """Closed-form high-voltage operating point of a two-port circuit.

    A solution with positive voltages exists iff the ratio of net loss
    (p1 + p2) to gross transfer |p1 - p2| lies strictly between 0 and 1.
    The mean voltage is |p1 - p2| / (2*sqrt(g*(p1 + p2))) and the larger
    voltage sits at the generating node.  The all-negative mirror solution
    is not reported.
    """
    if not g > 0:
        raise NonpositiveConductance(f"conductance must be positive, got {g}")
    loss = p1 + p2
    if loss < 0.0:
        # Negative net power rules out any operating point before the
        # transfer ratio is even defined.
        ratio = loss / abs(p1 - p2) if p1 != p2 else -math.inf
        return NoHighVoltageSolution(
            ratio=ratio, reason="net power is negative; circuit cannot dissipate"
        )
    if p1 == p2:
        raise EqualPowers("equal injections leave no transfer component")

    span = abs(p1 - p2)
    ratio = loss / span
    if ratio == 0.0:
        return NoHighVoltageSolution(
            ratio=ratio, reason="zero net loss lies on the excluded boundary"
        )
    if ratio >= 1.0:
        return NoHighVoltageSolution(
            ratio=ratio, reason="net loss is not smaller than gross transfer"
        )

    v0 = span / (2.0 * math.sqrt(g * loss))
    sign = 1.0 if p1 > p2 else -1.0
    deviation = ratio * sign * np.array([1.0, -1.0])
    v = v0 * (1.0 + deviation)
    matrix = np.array([[g, -g], [-g, g]])
    residual = residual_full(matrix, np.array([p1, p2]), v)
    return OperatingPoint(
        v=v,
        v0=v0,
        deviation=deviation,
        residual_norm=float(np.abs(residual).max()),
        iterations=0,
        start_index=-1,
    )
