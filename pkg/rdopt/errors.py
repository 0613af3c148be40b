"""rdopt 예외 계층. 각 예외는 CLI 종료 코드를 가진다."""


class RdOptError(Exception):
    exit_code = 2


class ConfigurationError(RdOptError):
    exit_code = 1

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConstraintError(ConfigurationError):
    """허용 집합(0 <= u0 <= 1, 질량 m) 위반"""


class MemoryBudgetError(ConfigurationError):
    """궤적 저장 예상 크기가 memory_cap_gib 를 넘는 경우"""


class NumericalError(RdOptError):
    exit_code = 2


class BlowUpError(NumericalError):

    def __init__(self, message: str, step: int, time: float):
        self.step = step
        self.time = time
        super().__init__(f"numerical blow-up at step {step} (t={time:.6g}): {message}")


class FieldFormatError(RdOptError):
    exit_code = 3

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PersistenceError(RdOptError):
    exit_code = 3
