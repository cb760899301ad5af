class PPMError(Exception):
    pass


class ValidationError(PPMError):
    '''Input that cannot describe a PPM game, profile or run'''
    pass


class MalformedScenario(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class MissingScenario(ValidationError):
    pass


class DuplicateId(ValidationError):
    pass


class UnknownId(ValidationError):
    pass


class EmptyCatalog(ValidationError):
    pass


class NonpositivePrice(ValidationError):
    pass


class NonpositiveDemand(ValidationError):
    pass


class UtilityOutOfRange(ValidationError):
    pass


class OffCatalogMass(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class NegativeMass(ValidationError):
    pass


class InvalidSettings(ValidationError):
    pass


class InvalidGrid(ValidationError):
    pass


class PreconditionError(ValidationError):
    '''Valid input the requested analysis does not apply to'''
    pass


class MultiSegmentUnsupported(PreconditionError):
    pass


class InteriorUnsupported(PreconditionError):
    pass


class DegenerateAttractiveness(PreconditionError):
    pass


class NoValidReference(PreconditionError):
    pass


class NotDegenerate(PreconditionError):
    pass


class CatalogTooLarge(PreconditionError):
    pass


class GridTooLarge(PreconditionError):
    pass


class OutsideFamilyDomain(PreconditionError):
    pass


class DenominatorNonpositive(PreconditionError):
    pass


class NoInteriorCandidate(PPMError):
    '''No start produced an interior stationary point'''
    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = list(candidates or [])
