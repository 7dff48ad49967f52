"""Change-history-driven maturity analysis for IEC 61131-3 Structured Text."""

from micose.catalog import default_catalog, load_catalog
from micose.diff import VersionPair, count_term_changes
from micose.frontend import parse_pou, split_pous
from micose.maturity import compute_maturity, traffic_light
from micose.store import HistoryStore

__version__ = "0.1.0"

__all__ = [
    "ChangeVectorizer", "HistoryStore", "MaturityEstimator", "VersionPair", "compute_maturity",
    "count_term_changes", "default_catalog", "load_catalog", "parse_pou", "split_pous",
    "traffic_light",
]


def __getattr__(name):
    # keep scikit-learn off the hook's import path
    if name in ("ChangeVectorizer", "MaturityEstimator"):
        from micose import estimator
        return getattr(estimator, name)
    raise AttributeError(f"module 'micose' has no attribute {name!r}")
