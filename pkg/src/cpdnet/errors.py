"""Exception hierarchy shared across the package."""


class CircuitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidNetwork(CircuitError):
    """A network description violates a structural invariant."""


class NetworkFormatError(InvalidNetwork):
    """A network file could not be parsed or fails strict schema checks."""


class DisconnectedGraph(InvalidNetwork):
    """The branch graph does not connect all nodes."""


class NonpositiveConductance(InvalidNetwork):
    """A branch conductance is zero or negative."""


class DuplicateBranch(InvalidNetwork):
    """Two branches join the same unordered node pair."""


class InteriorNodeHasInjection(InvalidNetwork):
    """A node marked interior also carries a power injection."""


class SingularInteriorBlock(CircuitError):
    """The interior sub-matrix cannot be inverted during node elimination."""


class EigenSolverFailure(CircuitError):
    """The eigendecomposition produced values inconsistent with a Laplacian."""


class DisconnectedSpectrum(CircuitError):
    """The second-smallest eigenvalue is numerically zero."""


class ZeroMeanVoltage(CircuitError):
    """A voltage vector with (near) zero mean cannot be decomposed."""


class DeviationNotOrthogonal(CircuitError):
    """A deviation vector has a non-negligible component along all-ones."""


class JacobianSingular(CircuitError):
    """The Newton Jacobian is singular or too ill-conditioned to use."""


class EqualPowers(CircuitError):
    """Two-port closed form is undefined when both injections are equal."""


class GenerationFailed(CircuitError):
    """Random instance generation could not satisfy the configured filters."""


class CertificateInapplicableAtBase(CircuitError):
    """A scaling probe requires the unscaled certificate to be applicable."""
