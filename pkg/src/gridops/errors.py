"""Exception hierarchy shared across the toolkit."""


class GridOpsError(Exception):
    """Base class for all toolkit errors. Carries a machine-readable code."""

    code = "error"


class DuplicateIdError(GridOpsError):
    code = "duplicate_id"

    def __init__(self, resource_id: str):
        super().__init__(f"duplicate resource id: {resource_id}")
        self.resource_id = resource_id


class UnknownResourceError(GridOpsError):
    code = "unknown_resource"

    def __init__(self, resource_id: str):
        super().__init__(f"unknown resource: {resource_id}")
        self.resource_id = resource_id


class StorageFullError(GridOpsError):
    code = "storage_full"


class UnavailableError(GridOpsError):
    code = "unavailable"


class ValidationError(GridOpsError):
    code = "validation"


class IllegalTransitionError(GridOpsError):
    code = "illegal_transition"

    def __init__(self, current: str, requested: str):
        super().__init__(f"illegal ticket transition: {current} -> {requested}")
        self.current = current
        self.requested = requested


class ConflictError(GridOpsError):
    code = "conflict"
