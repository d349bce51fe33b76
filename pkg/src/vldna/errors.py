"""Exception types raised across the package."""


class VLDNAError(Exception):
    pass


class IndexOverflow(VLDNAError):
    pass


class LengthNotInGroup(VLDNAError):
    pass


class MalformedStrand(VLDNAError):
    pass


class InvalidCodeword(VLDNAError):
    pass


class ExhaustedSearch(VLDNAError):
    pass


class OutOfRange(VLDNAError):
    pass


class NoFeasibleCut(VLDNAError):
    pass


class Infeasible(VLDNAError):
    pass


class TooLarge(VLDNAError):
    pass


class NonConvergence(VLDNAError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class MissingStrand(VLDNAError):
    def __init__(self, message, pair_rank=None, index=None):
        super().__init__(message)
        self.pair_rank = pair_rank
        self.index = index
