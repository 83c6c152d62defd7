"""Static figures from nmipe results CSV files."""

__version__ = "0.1.0"

from .reader import MalformedCsvError, ResultRow, ResultTable, read_results
from .render import PlotSpec, load_spec, render

__all__ = [
    "__version__",
    "MalformedCsvError",
    "ResultRow",
    "ResultTable",
    "read_results",
    "PlotSpec",
    "load_spec",
    "render",
]
