"""Exception types shared across the package."""


class SwanPsiError(Exception):
    pass


class MalformedStep(SwanPsiError):
    def __init__(self, index, message):
        super().__init__(f"step {index}: {message}")
        self.index = index


class PrecisionExhausted(SwanPsiError):
    """Raised when the known part of a series cannot certify a leading term."""


class UnsupportedProbe(SwanPsiError):
    pass


class UnsupportedTower(SwanPsiError):
    pass


class NotImplementedExact(SwanPsiError):
    pass


class ZeroConductor(SwanPsiError):
    pass


class TrivialClass(SwanPsiError):
    pass


class ZeroDifferential(SwanPsiError):
    pass


class NotPerfect(SwanPsiError):
    pass


class MalformedParams(SwanPsiError):
    pass


class NotBijective(SwanPsiError):
    pass


class BudgetExceeded(SwanPsiError):
    pass


class BoundaryCase(SwanPsiError):
    pass


class ParseError(SwanPsiError):
    """Syntax error in an element expression or a config document."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


class SemanticError(SwanPsiError):
    """Well-formed input that violates a mathematical constraint."""

    def __init__(self, message, path=""):
        if not isinstance(path, str):
            path = "".join(f"[{x}]" if isinstance(x, int) else f".{x}" for x in path).lstrip(".")
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.reason = message
