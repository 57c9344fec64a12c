"""Laplacian spectrum and the norm quantities the operating-region
certificates are built from."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedSpectrum, EigenSolverFailure
from .network import ConductanceMatrix, Network, build_conductance_matrix

# |lambda_1| above this fraction of lambda_n means the matrix is not the
# Laplacian of anything we should keep analyzing.
_LAMBDA1_RTOL = 1e-9


@dataclass(frozen=True)
class SpectralSummary:
    """Eigenvalues and norms of a conductance matrix.

    ``eigenvalues`` are ascending with the zero eigenvalue clamped to 0.
    ``eigenratio`` (largest over second-smallest) measures heterogeneity:
    1 for maximally uniform dense circuits, large for weakly connected or
    lopsided ones.  ``g_min`` is the smallest branch conductance of the
    originating network; it is None when the summary was computed from a
    bare matrix.
    """

    eigenvalues: np.ndarray
    lambda2: float
    lambda_max: float
    eigenratio: float
    inf_norm: float
    g_min: float | None


def laplacian_spectrum(
    matrix: ConductanceMatrix, network: Network | None = None
) -> SpectralSummary:
    """Full symmetric eigendecomposition of the conductance matrix.

    Raises EigenSolverFailure when the smallest eigenvalue is too far from
    zero (a broken Laplacian) and DisconnectedSpectrum when the second
    eigenvalue is numerically zero.
    """
    if matrix.size < 2:
        raise DisconnectedSpectrum("spectrum analysis needs at least two nodes")
    try:
        eigenvalues = np.linalg.eigvalsh(matrix.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(str(exc)) from exc

    lam_max = float(eigenvalues[-1])
    if lam_max <= 0:
        raise DisconnectedSpectrum("matrix has no positive eigenvalue")
    if abs(eigenvalues[0]) > _LAMBDA1_RTOL * lam_max:
        raise EigenSolverFailure(
            f"smallest eigenvalue {eigenvalues[0]:.3e} is not numerically zero"
        )
    lam2 = float(eigenvalues[1])
    if lam2 <= _LAMBDA1_RTOL * lam_max:
        raise DisconnectedSpectrum(
            f"second eigenvalue {lam2:.3e} is numerically zero; graph is disconnected"
        )

    clamped = eigenvalues.copy()
    clamped[0] = 0.0
    clamped.setflags(write=False)
    return SpectralSummary(
        eigenvalues=clamped,
        lambda2=lam2,
        lambda_max=lam_max,
        eigenratio=lam_max / lam2,
        inf_norm=matrix.inf_norm(),
        g_min=network.g_min() if network is not None else None,
    )


def inf_norm_and_gmin(network: Network, matrix: ConductanceMatrix) -> tuple[float, float]:
    """Infinity norm of the matrix and the smallest branch conductance.

    The infinity norm of a conductance Laplacian equals twice the largest
    nodal degree (sum of incident conductances); g_min comes from the
    branch list, never from matrix entries.
    """
    return matrix.inf_norm(), network.g_min()


def summarize_network(network: Network) -> tuple[ConductanceMatrix, SpectralSummary]:
    """Convenience: build the conductance matrix and its full summary."""
    matrix = build_conductance_matrix(network)
    return matrix, laplacian_spectrum(matrix, network)
