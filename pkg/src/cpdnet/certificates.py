"""Operating-region certificates.

Both certificates compare the net resistive loss to the zero-sum transfer
component of the injections, weighted by a heterogeneity measure of the
network: the eigenratio (largest over second-smallest eigenvalue) for the
spectral kind, and the infinity norm over the smallest branch conductance
for the infnorm kind.  When the resulting parameter ``delta`` lies
strictly between 0 and 1/2, every operating point is guaranteed to have
mean voltage at least ``v_min`` and relative deviations at most ``x_max``.
Outside that window the certificate makes no claim; its numbers are still
reported so users can see how far delta is from the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .decomposition import PowerDecomposition
from .errors import CertificateInapplicableAtBase
from .spectral import SpectralSummary

SPECTRAL = "spectral"
INFNORM = "infnorm"

INSIDE = "inside"
OUTSIDE = "outside"
NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class Certificate:
    """Certified lower bound on mean voltage and upper bound on deviation.

    ``applicable`` is True exactly when delta lies in the open interval
    (0, 1/2); otherwise ``reason`` explains why the bounds are not
    binding.  ``inputs`` records every quantity entering the formulas so
    reports are auditable.
    """

    kind: str
    delta: float
    v_min: float
    x_max: float
    applicable: bool
    reason: str | None
    inputs: dict[str, float]


@dataclass(frozen=True)
class Membership:
    status: str
    violations: tuple[str, ...] = ()


@dataclass(frozen=True)
class ScalingRow:
    eps: float
    delta: float
    v_min: float
    x_max: float
    applicable: bool


def _evaluate(
    kind: str,
    loss: float,
    perp_norm: float,
    heterogeneity: float,
    sqrt_denominator: float,
    inputs: dict[str, float],
) -> Certificate:
    reason = None
    if loss < 0.0:
        delta = loss / (perp_norm - loss) * heterogeneity if perp_norm - loss != 0 else -math.inf
        reason = "net injected power is negative; no operating points exist"
    elif perp_norm == 0.0:
        delta = math.inf if loss > 0.0 else 0.0
        reason = "zero-sum transfer component vanishes; ratio is undefined"
    elif perp_norm - loss <= 0.0:
        delta = math.inf if perp_norm == loss else loss / (perp_norm - loss) * heterogeneity
        reason = "loss is at least as large as the transfer norm"
    else:
        delta = loss / (perp_norm - loss) * heterogeneity

    applicable = 0.0 < delta < 0.5
    if not applicable and reason is None:
        if delta == 0.0:
            reason = "zero loss lies on the excluded boundary of the condition"
        else:
            reason = "heterogeneity-weighted loss ratio is not below 1/2"

    if delta == 0.0:
        x_max = 0.0
        v_min = math.inf
    elif not math.isfinite(delta):
        x_max = math.inf
        v_min = 0.0
    elif delta == 1.0:
        x_max = math.inf
        v_min = 0.0
    else:
        x_max = delta / (1.0 - delta)
        ratio = loss / sqrt_denominator
        v_min = (1.0 - delta) / delta * math.sqrt(ratio) if ratio >= 0 else math.nan

    return Certificate(
        kind=kind,
        delta=delta,
        v_min=v_min,
        x_max=x_max,
        applicable=applicable,
        reason=reason,
        inputs=inputs,
    )


def certificate_spectral(summary: SpectralSummary, pd: PowerDecomposition) -> Certificate:
    """Certificate from the 2-norm of the transfer and the eigenratio."""
    perp_norm = pd.transfer_norm2
    return _evaluate(
        SPECTRAL,
        pd.loss,
        perp_norm,
        summary.eigenratio,
        summary.lambda2,
        inputs={
            "loss": pd.loss,
            "transfer_norm2": perp_norm,
            "lambda2": summary.lambda2,
            "lambda_max": summary.lambda_max,
            "eigenratio": summary.eigenratio,
        },
    )


def certificate_infnorm(summary: SpectralSummary, pd: PowerDecomposition) -> Certificate:
    """Certificate from the max-norm of the transfer, the matrix infinity
    norm, and the smallest branch conductance."""
    if summary.g_min is None:
        raise ValueError("summary lacks g_min; compute the spectrum from a Network")
    perp_norm = pd.transfer_norm_inf
    return _evaluate(
        INFNORM,
        pd.loss,
        perp_norm,
        summary.inf_norm / summary.g_min,
        summary.g_min,
        inputs={
            "loss": pd.loss,
            "transfer_norm_inf": perp_norm,
            "inf_norm": summary.inf_norm,
            "g_min": summary.g_min,
        },
    )


def check_membership(certificate: Certificate, op) -> Membership:
    """Check an operating point against the certified region.

    ``op`` needs ``v0`` and ``deviation_inf`` attributes (an OperatingPoint
    or VoltageDecomposition-like object).
    """
    if not certificate.applicable:
        return Membership(status=NOT_APPLICABLE)
    violations = []
    if op.v0 < certificate.v_min:
        violations.append(
            f"mean voltage {op.v0:.6g} V is below the certified minimum "
            f"{certificate.v_min:.6g} V"
        )
    if op.deviation_inf > certificate.x_max:
        violations.append(
            f"max relative deviation {op.deviation_inf:.6g} exceeds the certified "
            f"bound {certificate.x_max:.6g}"
        )
    if violations:
        return Membership(status=OUTSIDE, violations=tuple(violations))
    return Membership(status=INSIDE)


def scaling_probe(
    summary: SpectralSummary, pd: PowerDecomposition, epsilons: Iterable[float]
) -> list[ScalingRow]:
    """Evaluate the spectral certificate as the loss component shrinks.

    Holds the transfer component fixed and scales the uniform loss part by
    each epsilon.  Requires the unscaled certificate to be applicable.  In
    the small-loss regime the certified voltage floor grows like
    eps**-0.5 while the deviation bound shrinks linearly.
    """
    base = certificate_spectral(summary, pd)
    if not base.applicable:
        raise CertificateInapplicableAtBase(
            f"base certificate inapplicable: {base.reason}"
        )
    rows = []
    for eps in epsilons:
        if eps < 0:
            raise ValueError("epsilons must be non-negative")
        cert = certificate_spectral(summary, pd.scaled_loss(eps))
        rows.append(
            ScalingRow(
                eps=float(eps),
                delta=cert.delta,
                v_min=cert.v_min,
                x_max=cert.x_max,
                applicable=cert.applicable,
            )
        )
    return rows


def region_rings(
    certificate: Certificate, levels: Sequence[float] = (1.0, 1.5, 2.0, 3.0)
) -> list[tuple[float, np.ndarray]]:
    """Sample the boundary of the certified region of a three-port circuit.

    The certified set {v0*(1+x) : v0 >= v_min, |x|_inf <= x_max, sum(x)=0}
    intersects each mean-voltage level in a hexagon (a cube cut by the
    zero-sum plane).  Returns closed 7-vertex polylines, one per level
    ``v0 = factor * v_min``, as (level_volts, vertices[7, 3]) pairs in
    voltage space.
    """
    if not certificate.applicable:
        raise ValueError("region geometry requires an applicable certificate")
    c = certificate.x_max
    hexagon = np.array(
        [
            [c, -c, 0.0],
            [c, 0.0, -c],
            [0.0, c, -c],
            [-c, c, 0.0],
            [-c, 0.0, c],
            [0.0, -c, c],
            [c, -c, 0.0],
        ]
    )
    rings = []
    for factor in levels:
        v0 = factor * certificate.v_min
        rings.append((v0, v0 * (1.0 + hexagon)))
    return rings
