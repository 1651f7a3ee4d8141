"""Exception hierarchy shared by every module.

Each class carries the process exit code the command line maps it to.
"""


class NystromTSError(Exception):
    exit_code = 1


class InvalidArgumentError(NystromTSError, ValueError):
    exit_code = 2


class ConfigError(InvalidArgumentError):
    exit_code = 2


class UnsupportedKernelError(InvalidArgumentError):
    exit_code = 2


class DataError(NystromTSError, ValueError):
    exit_code = 3


class DegenerateInputError(DataError):
    exit_code = 3


class NumericalError(NystromTSError, ArithmeticError):
    exit_code = 4


class StorageError(NystromTSError, OSError):
    exit_code = 5
