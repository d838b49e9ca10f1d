from typing import Any, Optional


class TspdError(Exception):
    """Base class for every failure the engine reports to callers."""


class InvalidArgumentError(TspdError):
    pass


class InstanceFormatError(TspdError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class DegenerateDensityError(TspdError):
    pass


class ContractViolationError(TspdError):
    pass


class IllegalActionError(TspdError):
    def __init__(self, rule: str, step: Optional[int] = None):
        self.rule = rule
        self.step = step
        prefix = f"step {step}: " if step is not None else ""
        super().__init__(f"{prefix}illegal action ({rule})")


class SizeLimitError(TspdError):
    pass


class ConfigurationError(TspdError):
    pass


class TrainingDivergenceError(TspdError):
    def __init__(self, message: str, diagnostics: Optional[dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class ReplayMismatchError(TspdError):
    def __init__(self, message: str, method: Optional[str] = None, instance: Optional[str] = None):
        self.method = method
        self.instance = instance
        super().__init__(message)
