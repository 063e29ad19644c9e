from typing import Any, Dict, Optional


class FowtCcdError(Exception):
    """Base class for all workbench errors.

    Every error carries a ``details`` dictionary that is written verbatim into the
    machine-readable error record emitted by the command line front end.
    """

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_record(self) -> Dict[str, Any]:
        return {
            "status": "error",
            "exit_code": self.exit_code,
            "type": self.__class__.__name__,
            "message": self.message,
            "details": self.details,
        }


class ScenarioError(FowtCcdError):
    """Scenario file missing, unreadable or failing validation."""

    exit_code = 3


class InvalidDesignError(FowtCcdError):
    """Plant design violates its geometric invariants."""


class InfeasiblePlantError(FowtCcdError):
    """Plant cannot float in equilibrium (negative variable ballast)."""


class ModelError(FowtCcdError):
    """Structural problem with the assembled equations of motion."""


class ModelEnvelopeError(FowtCcdError):
    """Pose outside the validity envelope of the hydrostatic model."""


class StiffnessError(FowtCcdError):
    """Forward integration failed (step-size underflow)."""


class RootFindError(FowtCcdError):
    """Newton iteration did not converge."""


class OutOfEnvelopeError(FowtCcdError):
    """Mooring line geometry outside the elastic catenary validity range."""


class TrainingFailure(FowtCcdError):
    """Surrogate validation error above the accepted threshold."""


class ExtrapolationError(FowtCcdError):
    """Surrogate queried outside its training domain."""


class SurrogateFormatError(FowtCcdError):
    """Serialized surrogate file is malformed or has an unknown version."""


class ArgumentError(FowtCcdError, ValueError):
    """Operation called with arguments outside its domain."""

    exit_code = 2
