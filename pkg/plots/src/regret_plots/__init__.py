"""Figure rendering for sleeping-bandits benchmark output.

Consumes the harness's ``aggregate.csv`` files (header
``t,regret_kind,comparator_id,mean,stderr,n_runs``) and draws mean regret
curves with shaded one-standard-error bands, one curve per input file.
"""

__version__ = "0.1.0"

from regret_plots.figure import CurveData, FigureSpec, SchemaError, load_series, render

__all__ = ["CurveData", "FigureSpec", "SchemaError", "load_series", "render", "__version__"]
