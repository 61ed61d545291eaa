"""Exception hierarchy shared by every hdrtsp module."""


class HDRError(Exception):
    """Base class for solver errors."""


class ContractViolation(HDRError, ValueError):
    """A caller broke an operation's precondition."""


class ValidationError(HDRError, ValueError):
    """A tour or instance failed structural validation."""


class DestroyInfeasible(HDRError):
    """Fewer than two deletable edges remain: the level is saturated."""


class SizeLimitError(HDRError):
    """Exact solver called on an instance larger than it supports."""


class InfeasibleError(HDRError):
    """No Hamiltonian cycle honours the forced edges."""


class MalformedFileError(HDRError):
    pass


class UnsupportedFormatError(HDRError):
    pass
