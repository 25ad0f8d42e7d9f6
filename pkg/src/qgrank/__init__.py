"""Query-graph ranking for knowledge-base question answering."""

from qgrank.errors import DataError, NumericalError, QGRankError

__version__ = "0.1.0"

__all__ = ["DataError", "NumericalError", "QGRankError", "__version__"]
