"""Exception hierarchy. Each error carries the process exit code the CLI reports."""

from typing import Optional


class BohmError(Exception):
    """Base error with a human readable detail and a CLI exit code."""

    exit_code: int = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigError(BohmError):
    """Malformed, missing or unknown configuration key."""

    exit_code = 2

    def __init__(self, detail: str, key: Optional[str] = None):
        super().__init__(detail)
        self.key = key


class DumpError(BohmError):
    """A CSV dump is missing or does not parse."""

    exit_code = 2


class NumericalError(BohmError):
    """A numerical invariant was violated."""

    exit_code = 3
    invariant = "numerical"

    def __init__(self, detail: str):
        super().__init__(f"{self.invariant}: {detail}")


class ZeroNorm(NumericalError):
    invariant = "nonzero norm"


class UnstableStep(NumericalError):
    invariant = "step bound dt <= dt_max"


class NodeProximity(NumericalError):
    invariant = "|psi| above node floor"


class PhaseWrap(NumericalError):
    invariant = "per-step phase change below pi"


class DimensionError(NumericalError):
    invariant = "consistent dimensions"
