"""
Error types for ffsupnorm.

Every failure carries a kebab-case ``code`` that is echoed in JSON reports and an
``exit_code`` used by the CLI (0 pass, 1 violation, 2 config error, 3 precision or
enumeration incompleteness).
"""


class FfsnError(ValueError):
    """Base error; ``code`` names the failure, ``exit_code`` the CLI status."""

    exit_code = 1

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"{code}: {self.message}")

    def to_dict(self) -> dict:
        return {"error": self.code, "message": self.message}


class PrecisionExhausted(FfsnError):
    exit_code = 3

    def __init__(self, message: str = ""):
        super().__init__("precision-exhausted", message)


class EnumerationIncomplete(FfsnError):
    exit_code = 3

    def __init__(self, message: str = ""):
        super().__init__("enumeration-incomplete", message)


class ConfigError(FfsnError):
    exit_code = 2

    def __init__(self, message: str = ""):
        super().__init__("config-error", message)


class IdentityViolation(FfsnError):
    """An exact identity or inequality failed."""

    exit_code = 1
