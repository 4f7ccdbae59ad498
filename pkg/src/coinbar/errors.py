"""Exception hierarchy.

Every error carries a short ``category`` string; the CLI prints it as the
machine-parseable first field of its one-line failure message.
"""


class CoinbarError(Exception):
    category = "error"


class ConfigError(CoinbarError, ValueError):
    category = "config"


class BoundsError(CoinbarError, IndexError):
    category = "bounds"


class UsageError(CoinbarError, ValueError):
    category = "usage"


class UndefinedRewardError(CoinbarError, ValueError):
    category = "undefined-reward"


class StateCorruptionError(CoinbarError, ValueError):
    category = "state-corruption"


class InstanceTooLargeError(CoinbarError, ValueError):
    category = "instance-too-large"


class UnsupportedError(CoinbarError, ValueError):
    category = "unsupported"


class OutputError(CoinbarError, OSError):
    category = "io"
