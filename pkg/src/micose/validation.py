"""Input validation helpers shared by the estimator facade and the CLI."""
from __future__ import annotations

from typing import Iterable, List, Sequence, Union

from micose.catalog import Catalog, default_catalog, load_catalog
from micose.diff import VersionPair
from micose.frontend import Pou, parse_pou

PouLike = Union[Pou, str]


def check_pou(value: PouLike) -> Pou:
    if isinstance(value, Pou):
        return value
    if isinstance(value, str):
        return parse_pou(value)
    raise TypeError(f"expected a Pou or Structured Text source, got {type(value).__name__}")


def check_version_pairs(X: Iterable) -> List[VersionPair]:
    """Accept VersionPair objects or (before, after) tuples of Pou/source text."""
    if isinstance(X, (VersionPair, tuple)) and not isinstance(X, list):
        if isinstance(X, VersionPair) or (len(X) == 2 and not isinstance(X[0], (tuple, VersionPair))):
            X = [X]
    pairs = []
    for i, item in enumerate(X):
        if isinstance(item, VersionPair):
            pairs.append(item)
            continue
        try:
            before, after = item
        except (TypeError, ValueError):
            raise ValueError(f"sample {i}: expected a (before, after) pair") from None
        pairs.append(VersionPair(check_pou(before), check_pou(after)))
    if not pairs:
        raise ValueError("need at least one version pair")
    return pairs


def check_catalog(catalog) -> Catalog:
    if catalog is None:
        return default_catalog()
    if isinstance(catalog, Catalog):
        return catalog
    if isinstance(catalog, str):
        return load_catalog(catalog)
    raise TypeError(f"catalog must be a Catalog, a path or None, got {type(catalog).__name__}")


def check_choice(name: str, value, choices: Sequence):
    if value not in choices:
        raise ValueError(f"{name} must be one of {', '.join(map(repr, choices))}, got {value!r}")
    return value
