"""Exception hierarchy shared by every heatlab module."""


class HeatlabError(Exception):
    """Base class for all library errors."""


class SchemaError(HeatlabError, ValueError):
    """Malformed configuration, chart document or expression."""


class SingularMetricError(HeatlabError, ValueError):
    pass


class MissingJetError(HeatlabError, ValueError):
    """A formula needs derivatives that the supplied jet does not carry."""


class DimensionMismatchError(HeatlabError, ValueError):
    pass


class UnsupportedConfigurationError(HeatlabError, NotImplementedError):
    """Requested configuration lies outside what the library computes."""


class AliasingError(HeatlabError, ValueError):
    """Truncation too small for the bandwidth of a twist."""


class NumericalContractError(HeatlabError, RuntimeError):
    """A numerical guarantee (gap ratio, conditioning, reliability window) failed."""


class AmbiguousKernelError(NumericalContractError):
    pass


class BudgetExceededError(HeatlabError, ValueError):
    pass
