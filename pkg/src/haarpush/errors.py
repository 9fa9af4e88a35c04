"""Exception hierarchy shared by all modules."""


class HaarPushError(Exception):
    """Base class for every error raised by haarpush."""


class DomainError(HaarPushError):
    pass


class ChartError(HaarPushError):
    pass


class SubgroupError(HaarPushError):
    pass


class NotNormalError(SubgroupError):
    pass


class CertificateError(HaarPushError):
    pass


class IntegrationError(HaarPushError):
    pass


class ConfigError(HaarPushError):
    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
