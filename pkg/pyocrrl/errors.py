from __future__ import print_function, division


class OcrrlError(Exception):
    """base type for all pyocrrl errors.  exit_code is the process
    status the command line maps the error to
    """
    exit_code = 5
    kind = "internal"


class ConfigError(OcrrlError):
    """bad, missing or inconsistent run configuration (including a
    missing renderer binary)
    """
    exit_code = 2
    kind = "config"


class ParseError(OcrrlError):
    """a dataset line is not valid JSON"""
    exit_code = 3
    kind = "parse"


class SchemaError(OcrrlError):
    """a record is missing a required field or has a field of the wrong type"""
    exit_code = 3
    kind = "schema"


class DomainError(SchemaError):
    """unknown domain tag"""
    kind = "domain"


class DatasetError(OcrrlError):
    """dataset level problem: duplicate ids, missing image references"""
    exit_code = 3
    kind = "dataset"


class SegmentationError(OcrrlError):
    """unclosed formula or table delimiter"""
    exit_code = 3
    kind = "segmentation"


class NormalizationError(OcrrlError):
    kind = "normalization"


class ContractError(OcrrlError, AssertionError):
    """violated precondition of an operation"""
    kind = "contract"


class InputError(OcrrlError):
    """an image could not be decoded"""
    kind = "input"


class TransportError(OcrrlError):
    """the embedding service failed.  attempts is the number of requests
    made, retries + 1 when every retry failed
    """
    exit_code = 4
    kind = "transport"

    def __init__(self, message, attempts=0):
        super(TransportError, self).__init__(message)
        self.attempts = attempts


class DimensionError(TransportError):
    """the embedding service returned a vector of the wrong length"""
    kind = "dimension"

    def __init__(self, message, expected=None, actual=None, attempts=0):
        super(DimensionError, self).__init__(message, attempts=attempts)
        self.expected = expected
        self.actual = actual


class ReportError(OcrrlError):
    kind = "report"
