# -*- coding: utf-8 -*-


class GraphTransformerError(Exception):
    """
    Base class for gtbench Errors
    """
    pass


class InvalidInputError(GraphTransformerError):
    """
    Raised when arguments do not meet the preconditions of an operation,
    such as mismatched dimensions or a non-symmetric matrix passed
    to a symmetric solver
    """
    pass


class NumericError(GraphTransformerError):
    """
    Raised when a computation produces or receives non-finite values
    """
    pass


class DegenerateMaskError(NumericError):
    """
    Raised when an attention row has every entry masked out
    """
    pass


class GraphParseError(GraphTransformerError):
    """
    Base class for errors found while reading a graph file
    """
    pass


class MalformedRecordError(GraphParseError):
    """
    Raised when a record in a graph file cannot be interpreted
    """
    pass


class UnknownNodeError(GraphParseError):
    """
    Raised when an edge references a node id that does not exist
    """
    pass


class AsymmetricAdjacencyError(GraphParseError):
    """
    Raised when an undirected graph ends up with an asymmetric adjacency
    """
    pass


class ConfigError(GraphTransformerError):
    """
    Raised when an experiment configuration fails validation

    :param problems: Each entry is ``<field path>: <message>``
    :type problems: list
    """
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__('; '.join(self.problems))


class UndefinedMetricError(GraphTransformerError):
    """
    Raised when a metric is undefined for the labels given, for
    example ROC-AUC when only one class is present
    """
    pass
