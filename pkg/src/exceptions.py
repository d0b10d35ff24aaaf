"""Exception hierarchy shared by the services, the CLI and the HTTP API."""

# CLI exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_UNSATISFIABLE = 2
EXIT_TIMEOUT = 3
EXIT_INPUT_ERROR = 4


class ExtractionError(Exception):
    """Base class for every error raised by the extraction pipeline."""

    exit_code = EXIT_FAILURE


class InputError(ExtractionError, ValueError):
    """An input document (e-graph, circuit, config) is malformed."""

    exit_code = EXIT_INPUT_ERROR


class UnsatisfiableError(ExtractionError):
    """No (acyclic) satisfying evaluation exists."""

    exit_code = EXIT_UNSATISFIABLE


class PipelineTimeout(ExtractionError):
    """The cooperative deadline of an instance expired."""

    exit_code = EXIT_TIMEOUT

    def __init__(self, stage: str, budget: float):
        super().__init__(f"timed out during {stage} (budget {budget:g}s)")
        self.stage = stage
        self.budget = budget


class RecoveryMismatch(ExtractionError):
    """Recovering an original-circuit evaluation failed its post-checks."""


class MalformedEvaluation(ExtractionError, ValueError):
    """An evaluation cannot be mapped back to an extraction."""


class InstanceTooLarge(ExtractionError):
    """A brute-force oracle refused an instance above its size guard."""
