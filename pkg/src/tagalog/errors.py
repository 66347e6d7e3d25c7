"""Exception types. CLI exit codes key off these classes."""


class TagalogError(Exception):
    exit_code = 2


class ConfigError(TagalogError):
    exit_code = 1


class DataError(TagalogError):
    exit_code = 2


class UnknownLanguage(DataError):
    pass


class NumericalError(TagalogError):
    exit_code = 3
