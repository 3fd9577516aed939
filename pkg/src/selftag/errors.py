"""Exception hierarchy shared across the package.

Every error carries a CLI exit-code category: config errors exit 2, data
errors exit 3, model/runtime errors exit 4.
"""


class SelftagError(Exception):
    exit_code = 4


class ConfigError(SelftagError):
    exit_code = 2


class DataError(SelftagError):
    exit_code = 3


class ModelError(SelftagError):
    exit_code = 4
