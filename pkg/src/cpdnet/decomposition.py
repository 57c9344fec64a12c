"""Splitting injections and voltages into uniform and zero-sum parts.

Injections split as P = (loss/n)*ones + transfer with transfer summing to
zero: ``loss`` is the net power dissipated in the branches, ``transfer``
the power exchanged between nodes.  Voltages split as V = v0*(ones + x)
with mean level v0 and dimensionless deviation x summing to zero.  The
circuit equation diag(V)*G*V = P is equivalent to the pair

    loss     = v0^2 * x'Gx
    transfer = v0^2 * (Gx + diag(x)Gx) - (loss/n)*ones

which ``residual_decomposed`` evaluates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DeviationNotOrthogonal, ZeroMeanVoltage
from .network import ConductanceMatrix

_MEAN_RTOL = 1e-12
_ORTHO_RTOL = 1e-9


def _as_array(matrix) -> np.ndarray:
    if isinstance(matrix, ConductanceMatrix):
        return matrix.matrix
    return np.asarray(matrix, dtype=float)


@dataclass(frozen=True)
class PowerDecomposition:
    """Net dissipated power and the zero-sum transfer component (watts)."""

    loss: float
    transfer: np.ndarray

    @property
    def n(self) -> int:
        return self.transfer.shape[0]

    @property
    def transfer_norm2(self) -> float:
        return float(np.linalg.norm(self.transfer))

    @property
    def transfer_norm_inf(self) -> float:
        return float(np.abs(self.transfer).max(initial=0.0))

    def reconstruct(self) -> np.ndarray:
        return self.loss / self.n + self.transfer

    def scaled_loss(self, factor: float) -> "PowerDecomposition":
        """Same transfer with the uniform loss component scaled by ``factor``."""
        return PowerDecomposition(loss=factor * self.loss, transfer=self.transfer)


@dataclass(frozen=True)
class VoltageDecomposition:
    """Mean voltage level (volts) and zero-sum relative deviation."""

    v0: float
    deviation: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.v0 * (1.0 + self.deviation)

    @property
    def deviation_inf(self) -> float:
        return float(np.abs(self.deviation).max(initial=0.0))


def decompose_power(injections: np.ndarray) -> PowerDecomposition:
    p = np.asarray(injections, dtype=float)
    loss = float(p.sum())
    transfer = p - loss / p.shape[0]
    transfer.setflags(write=False)
    return PowerDecomposition(loss=loss, transfer=transfer)


def decompose_voltage(voltages: np.ndarray) -> VoltageDecomposition:
    v = np.asarray(voltages, dtype=float)
    v0 = float(v.mean())
    if abs(v0) <= _MEAN_RTOL * max(float(np.abs(v).max(initial=0.0)), 1e-300):
        raise ZeroMeanVoltage(f"mean voltage {v0} is numerically zero")
    deviation = v / v0 - 1.0
    deviation.setflags(write=False)
    return VoltageDecomposition(v0=v0, deviation=deviation)


def residual_full(matrix, injections: np.ndarray, voltages: np.ndarray) -> np.ndarray:
    """diag(V)*G*V - P; the zero vector exactly at an operating point."""
    g = _as_array(matrix)
    v = np.asarray(voltages, dtype=float)
    p = np.asarray(injections, dtype=float)
    return v * (g @ v) - p


def residual_decomposed(
    matrix,
    v0: float,
    deviation: np.ndarray,
    loss: float,
    transfer: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Residuals of the loss equation (scalar) and transfer equation (vector).

    Requires the deviation to lie in the zero-sum subspace; both residuals
    vanish exactly when v0*(1+deviation) is an operating point for the
    injections reconstructed from (loss, transfer).
    """
    g = _as_array(matrix)
    x = np.asarray(deviation, dtype=float)
    if abs(float(x.sum())) > _ORTHO_RTOL * max(1.0, float(np.abs(x).sum())):
        raise DeviationNotOrthogonal(f"deviation sums to {x.sum():.3e}, not zero")
    transfer = np.asarray(transfer, dtype=float)
    n = x.shape[0]
    gx = g @ x
    loss_residual = v0 * v0 * float(x @ gx) - loss
    transfer_residual = v0 * v0 * (gx + x * gx) - loss / n - transfer
    return loss_residual, transfer_residual
