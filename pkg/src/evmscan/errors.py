"""Exception hierarchy shared across the scanner."""


class EvmScanError(Exception):
    """Base class for all errors raised by this package."""


class MalformedHex(EvmScanError):
    """Input text is not valid hexadecimal bytecode."""


class EmptyCorpus(EvmScanError):
    """A corpus-level statistic was requested over zero documents."""


class VocabError(EvmScanError):
    """A token id falls outside the encoder vocabulary."""


class LengthError(EvmScanError):
    """A token sequence exceeds the encoder's maximum length."""


class WeightFormatError(EvmScanError):
    """An encoder weight file is malformed or inconsistent with its header."""


class EmptyTrainingSet(EvmScanError):
    """Classifier training was invoked with no samples."""


class DegenerateLabels(EvmScanError):
    """Classifier training requires both classes to be present."""


class FeatureDimError(EvmScanError):
    """A feature vector's dimension does not match the trained model."""


class CorpusTooSmall(EvmScanError):
    """The corpus is too small to be split into train and test parts."""


class BundleError(EvmScanError):
    """A model bundle archive is missing entries or internally inconsistent."""
