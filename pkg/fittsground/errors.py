################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################


class DataError(ValueError):
    """Unreadable or malformed input data (annotation files, corpora, label files)."""


class NumericalError(ArithmeticError):
    """Non-finite intermediate values or degenerate numerical configurations.

    :param message: human readable description
    :param context: optional diagnostic values (e.g. epoch, batch and component losses)
    """

    def __init__(self, message: str, **context):
        if context:
            details = ', '.join(f'{k}={v}' for k, v in context.items())
            message = f'{message} ({details})'
        super().__init__(message)
        self.context = context
