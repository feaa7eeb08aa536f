"""Exception hierarchy shared by every stage of the pipeline."""


class FlowdescError(Exception):
    """Base class for all errors raised by flowdesc."""


class InputError(FlowdescError, ValueError):
    """Bad argument: out-of-range parameter, empty data, wrong shape."""


class FormatError(FlowdescError):
    """A binary container or manifest does not follow its layout."""


class DataError(FlowdescError):
    """File is well formed but its payload is unusable (NaN, size mismatch)."""


class ConfigError(FlowdescError):
    """Pipeline configuration is inconsistent or names an unsupported combination."""
