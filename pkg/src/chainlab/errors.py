"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line driver.
"""


class ChainlabError(Exception):
    exit_code = 1


class ConfigError(ChainlabError):
    exit_code = 2


class ParamError(ChainlabError, ValueError):
    exit_code = 2


class GeometryError(ChainlabError):
    exit_code = 3


class AttachmentError(GeometryError):
    pass


class DegenerateNeckError(GeometryError):
    pass


class ConstantEstimationError(GeometryError):
    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class OutsideDomainError(GeometryError):
    pass


class StraighteningError(GeometryError):
    pass


class MeshError(ChainlabError):
    exit_code = 4


class AssemblyError(ChainlabError):
    exit_code = 5


class SolverError(ChainlabError):
    exit_code = 5


class TruncationError(ChainlabError):
    exit_code = 5


class DegenerateRegionError(ChainlabError):
    exit_code = 5


class NullEigenfunctionError(ChainlabError):
    exit_code = 6


class ClassificationGapError(ChainlabError):
    exit_code = 6
