"""Error handling and tracking for the TransNN toolkit"""

from dataclasses import dataclass
from datetime import datetime
from typing import Optional, List, Tuple
import sys


class TransNNError(Exception):
    """Base class for all toolkit errors"""


class SpecFormatError(TransNNError):
    """Network specification document is malformed"""


class ScheduleError(TransNNError):
    """Parameter schedule cannot provide a frame"""


class DimensionMismatch(TransNNError, ValueError):
    """Vector or state does not match the network size"""


class DomainError(TransNNError, ValueError):
    """Argument lies outside the domain of a function"""


class InfeasibleProbabilityPair(TransNNError, ValueError):
    """Firing probability exceeds the no-inhibition probability"""


class StateSpaceTooLarge(TransNNError):
    """Exact enumeration requested above the node cap"""


class CertificateError(TransNNError):
    """Certificate preconditions are not met"""


class ConvergenceError(TransNNError):
    """Iterative method hit its iteration cap"""

    def __init__(self, message: str, last_iterate=None, last_estimate: Optional[float] = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.last_estimate = last_estimate


@dataclass
class ErrorRecord:
    """Record of an error that occurred during execution"""
    timestamp: datetime
    component: str
    frame: Optional[int]
    node: Optional[int]
    edge: Optional[Tuple[int, int]]
    error_type: str
    error_message: str

    def __str__(self) -> str:
        """Format error for display (1-based node labels)"""
        parts = [f"[{self.component}]"]
        if self.frame is not None:
            parts.append(f"Frame: {self.frame}")
        if self.node is not None:
            parts.append(f"Node: {self.node + 1}")
        if self.edge is not None:
            parts.append(f"Edge: {self.edge[0] + 1}<-{self.edge[1] + 1}")
        parts.append(f"{self.error_type}: {self.error_message}")
        return " - ".join(parts)


class ErrorTracker:
    """Singleton class to track errors across the application"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance.errors: List[ErrorRecord] = []
            cls._instance.echo = True
        return cls._instance

    def log_error(
        self,
        component: str,
        error: Exception,
        frame: Optional[int] = None,
        node: Optional[int] = None,
        edge: Optional[Tuple[int, int]] = None
    ) -> None:
        """
        Log an error for later reporting

        Args:
            component: Name of the component where error occurred
            error: The exception that was raised
            frame: Schedule frame index (if applicable)
            node: 0-based node index (if applicable)
            edge: 0-based (target, source) pair (if applicable)
        """
        self._append(ErrorRecord(
            timestamp=datetime.now(),
            component=component,
            frame=frame,
            node=node,
            edge=edge,
            error_type=type(error).__name__,
            error_message=str(error)
        ))

    def log_violation(self, component: str, violation) -> None:
        """
        Log a spec validation violation

        Args:
            component: Name of the component that ran the validation
            violation: network_model.Violation instance
        """
        self._append(ErrorRecord(
            timestamp=datetime.now(),
            component=component,
            frame=violation.frame,
            node=violation.node,
            edge=violation.edge,
            error_type='Violation',
            error_message=violation.message
        ))

    def _append(self, record: ErrorRecord) -> None:
        self.errors.append(record)

        # Print error immediately for visibility
        if self.echo:
            print(f"  ✗ Error: {record}", file=sys.stderr)

    def get_error_summary(self) -> List[str]:
        """
        Get formatted list of error messages

        Returns:
            List of formatted error strings
        """
        return [str(error) for error in self.errors]

    def has_errors(self) -> bool:
        """Check if any errors were logged"""
        return len(self.errors) > 0

    def get_error_count(self) -> int:
        """Get total count of errors"""
        return len(self.errors)

    def reset(self) -> None:
        """Clear all logged errors"""
        self.errors.clear()


# Global error tracker instance
error_tracker = ErrorTracker()
