from __future__ import absolute_import, division, print_function


class MixfemError(Exception):
    pass


# mesh
class DegenerateTriangle(MixfemError):
    pass


class NonConformingInput(MixfemError):
    pass


class InterfaceViolation(MixfemError):
    pass


# elements
class UnsupportedDegree(MixfemError):
    pass


class UnsupportedOrder(MixfemError):
    pass


# coefficients
class NonPositiveCoefficient(MixfemError):
    pass


class MissingSubdomain(MixfemError):
    pass


# assembly / solver
class UnstablePair(MixfemError):
    pass


class SingularSystem(MixfemError):
    pass


class NoConvergence(MixfemError):
    pass


class LocalSingularSystem(MixfemError):
    pass


# analysis
class EigenSolveFailure(MixfemError):
    pass


# problems
class UnknownProblem(MixfemError):
    pass


class InvalidParams(MixfemError):
    pass


class RootFindFailure(MixfemError):
    pass


# study
class NonPositiveError(MixfemError):
    pass


class InvalidConfig(MixfemError):
    pass
