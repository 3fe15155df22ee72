"""Exception types shared across the package."""


class FuzzEvalError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FuzzEvalError):
    """A configuration is invalid or references missing resources."""


class ExecutionError(FuzzEvalError):
    """A target could not be executed (spawn failure, bad binary, ...).

    Never used for crashes: a crash is a valid observation, not an error.
    """


class StrategyUnavailableError(FuzzEvalError):
    """A de-duplication strategy cannot run on the given data.

    Raised e.g. when coverage-based dedup is asked to process crashes with
    empty coverage profiles (external subprocess targets record none).
    """


class CampaignError(FuzzEvalError):
    """A trial inside a campaign failed; identifies the failing cell."""

    def __init__(self, message, fuzzer_id=None, target_id=None,
                 seed_config_id=None, trial_index=None):
        super().__init__(message)
        self.fuzzer_id = fuzzer_id
        self.target_id = target_id
        self.seed_config_id = seed_config_id
        self.trial_index = trial_index
