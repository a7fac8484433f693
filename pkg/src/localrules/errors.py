class LocalRulesError(Exception):
    """Base class for all errors raised by this package."""


class DataError(LocalRulesError):
    pass


class SchemaError(DataError):
    """Schema file or CSV does not match the declared feature space."""

    def __init__(self, message: str, column: str | None = None):
        super().__init__(message)
        self.column = column


class NonBinaryTargetError(SchemaError):
    pass


class BlackBoxError(LocalRulesError):
    pass


class TransportError(BlackBoxError):
    """The black box could not be reached, crashed, or timed out."""


class ContractViolation(BlackBoxError):
    """The black box answered, but the answer breaks the wire protocol."""


class HandshakeError(ContractViolation):
    pass
