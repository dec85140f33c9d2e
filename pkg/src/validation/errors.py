from typing import Optional


class DepthToolkitError(ValueError):
    """Base exception for every toolkit failure"""
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ShapeMismatchError(DepthToolkitError):
    """Height/width/channel disagreement between tensors"""


class RegistryMismatchError(DepthToolkitError):
    """Label map registry differs from the one an operation expects"""


class DomainError(DepthToolkitError):
    """Numerical precondition violated (non-positive input, empty valid set, ...)"""


class ConfigurationError(DepthToolkitError):
    """Invalid spec, config value, unit descriptor or size"""


class DatasetError(DepthToolkitError):
    """Missing files, degenerate split or missing modality"""
    def __init__(self, message, field=None, missing_paths: Optional[list] = None):
        super().__init__(message, field=field)
        self.missing_paths = list(missing_paths or [])


class IncompatibleCheckpointError(DepthToolkitError):
    """Checkpoint variant cannot consume the given data"""


class NonFiniteLossError(DepthToolkitError):
    """Training loss stopped being finite"""
    def __init__(self, message, last_good_checkpoint=None):
        super().__init__(message, field="loss")
        self.last_good_checkpoint = last_good_checkpoint


class UsageError(DepthToolkitError):
    """Command-line misuse; exits with code 2"""
