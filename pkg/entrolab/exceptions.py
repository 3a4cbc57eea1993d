class EntroLabException(Exception):
    exit_code = 3


class ValidationException(EntroLabException):
    exit_code = 2


class FileNotFoundException(ValidationException):
    pass


class GridMismatchException(ValidationException):
    pass


class IllPosedGainException(ValidationException):
    pass


class NumericalException(EntroLabException):
    exit_code = 3


class StabilityException(NumericalException):
    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class PositivityException(NumericalException):
    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class DivergenceException(NumericalException):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class IdentityViolation(NumericalException):
    pass
