"""Maturity score: size-blended change deltas aggregated per version pair.

Per term, ``delta = k_l*w*r + k_e*w*(1 - exp(-p*r))`` with change ratio
``r``, term weight ``w`` and size factors ``k_l + k_e = 1`` that move from
purely linear (<= 150 SLOC) to purely exponential (>= 1000 SLOC). The
aggregate is ``maturity = 1 - sum(delta) / n``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple

from micose.catalog import CATEGORY_ORDER, Catalog, term_weight
from micose.diff import ChangeVector, change_ratio
from micose.errors import ConfigError, ConsistencyError

SMALL_SLOC = 150
LARGE_SLOC = 1000

ENHANCED, LEGACY = "enhanced", "legacy"
ACTIVE, CATALOG = "active", "catalog"
GREEN, YELLOW, RED = "green", "yellow", "red"


@dataclass(frozen=True)
class SizeFactors:
    k_l: float
    k_e: float
    sloc_basis: int


@dataclass(frozen=True)
class Thresholds:
    green: float = 0.90
    yellow: float = 0.70

    def __post_init__(self):
        if not (0 < self.yellow < self.green < 1):
            raise ConfigError(f"traffic-light thresholds need 0 < yellow < green < 1, "
                              f"got green={self.green}, yellow={self.yellow}")


@dataclass(frozen=True)
class TermDelta:
    term_id: str
    delta: float
    w: float
    ratio: float
    category: str = ""
    changed: int = 0
    before_total: int = 0
    catalog: str = ""


@dataclass(frozen=True)
class MaturityResult:
    maturity: float
    n: int
    term_deltas: Tuple[TermDelta, ...]
    category_deltas: Dict[str, float]
    color: str
    size_factors: SizeFactors
    mode: str = ENHANCED
    aggregation: str = ACTIVE

    @property
    def category_changed(self) -> Dict[str, int]:
        out = {c: 0 for c in CATEGORY_ORDER}
        for td in self.term_deltas:
            out[td.category] = out.get(td.category, 0) + td.changed
        return out

    @property
    def is_change(self) -> bool:
        return any(td.delta > 0 for td in self.term_deltas)

    def to_dict(self) -> dict:
        return {
            "maturity": self.maturity, "n": self.n, "color": self.color,
            "mode": self.mode, "aggregation": self.aggregation,
            "category_deltas": dict(self.category_deltas),
            "size_factors": asdict(self.size_factors),
            "term_deltas": [asdict(td) for td in self.term_deltas],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MaturityResult":
        return cls(
            maturity=data["maturity"], n=data["n"],
            term_deltas=tuple(TermDelta(**td) for td in data["term_deltas"]),
            category_deltas=dict(data["category_deltas"]), color=data["color"],
            size_factors=SizeFactors(**data["size_factors"]),
            mode=data.get("mode", ENHANCED), aggregation=data.get("aggregation", ACTIVE),
        )


def size_factors(sloc: int) -> SizeFactors:
    if sloc >= LARGE_SLOC:
        k_e = 1.0
    elif sloc <= SMALL_SLOC:
        k_e = 0.0
    else:
        k_e = (sloc - SMALL_SLOC) / (LARGE_SLOC - SMALL_SLOC)
    return SizeFactors(1.0 - k_e, k_e, sloc)


def delta_enhanced(ratio: float, w: float, sf: SizeFactors, p: float = 5.0) -> float:
    return sf.k_l * w * ratio + sf.k_e * w * (1.0 - math.exp(-p * ratio))


def delta_legacy(ratio: float) -> float:
    return ratio


def traffic_light(maturity: float, thresholds: Optional[Thresholds] = None) -> str:
    t = thresholds or Thresholds()
    if maturity >= t.green:
        return GREEN
    if maturity >= t.yellow:
        return YELLOW
    return RED


def aggregate(term_deltas: Sequence[TermDelta], mode: str = ACTIVE, *,
              catalog_size: Optional[int] = None, thresholds: Optional[Thresholds] = None,
              size: Optional[SizeFactors] = None, delta_mode: str = ENHANCED) -> MaturityResult:
    """Combine term deltas into one maturity value.

    ``mode="active"`` divides by the number of nonzero deltas; ``"catalog"``
    divides by ``catalog_size``.
    """
    fingerprints = {td.catalog for td in term_deltas if td.catalog}
    if len(fingerprints) > 1:
        raise ConsistencyError(f"term deltas come from different catalogs: {sorted(fingerprints)}")
    for td in term_deltas:
        if not 0.0 <= td.delta <= 1.0:
            raise ValueError(f"delta of {td.term_id} outside [0,1]: {td.delta}")
    active = [td for td in term_deltas if td.delta > 0]
    if mode == ACTIVE:
        n = len(active)
    elif mode == CATALOG:
        if not catalog_size:
            raise ValueError("catalog aggregation needs catalog_size")
        n = catalog_size
    else:
        raise ValueError(f"unknown aggregation mode {mode!r}")
    total = math.fsum(td.delta for td in active)
    maturity = 1.0 - total / n if n and active else 1.0
    maturity = min(1.0, max(0.0, maturity))
    categories: Dict[str, float] = {c: 0.0 for c in CATEGORY_ORDER}
    for td in active:
        categories[td.category] = categories.get(td.category, 0.0) + td.delta
    return MaturityResult(
        maturity=maturity, n=n, term_deltas=tuple(term_deltas), category_deltas=categories,
        color=traffic_light(maturity, thresholds), size_factors=size or size_factors(0),
        mode=delta_mode, aggregation=mode,
    )


def term_deltas(vector: ChangeVector, catalog: Catalog, mode: str = ENHANCED) -> Tuple[TermDelta, ...]:
    sf = size_factors(vector.sloc_before)
    fp = catalog.fingerprint
    out = []
    for term in catalog.terms:
        count = vector.counts.get(term.id)
        if count is None:
            continue
        ratio = change_ratio(count)
        if mode == ENHANCED:
            w = term_weight(term, catalog)
            delta = delta_enhanced(ratio, w, sf, catalog.p)
        elif mode == LEGACY:
            w = 1.0
            delta = delta_legacy(ratio)
        else:
            raise ValueError(f"unknown delta mode {mode!r}")
        out.append(TermDelta(term.id, delta, w, ratio, term.category.name,
                             count.changed, count.before_total, fp))
    return tuple(out)


def compute_maturity(vector: ChangeVector, catalog: Catalog, mode: str = ENHANCED,
                     aggregation: str = ACTIVE, thresholds: Optional[Thresholds] = None) -> MaturityResult:
    """Score one change vector; the size basis is the before-version SLOC."""
    deltas = term_deltas(vector, catalog, mode)
    return aggregate(deltas, aggregation, catalog_size=len(catalog), thresholds=thresholds,
                     size=size_factors(vector.sloc_before), delta_mode=mode)


def baseline_result(sloc: int, thresholds: Optional[Thresholds] = None,
                    mode: str = ENHANCED, aggregation: str = ACTIVE) -> MaturityResult:
    """Result for a POU without a before-version: maturity 1."""
    return MaturityResult(1.0, 0, (), {c: 0.0 for c in CATEGORY_ORDER},
                          traffic_light(1.0, thresholds), size_factors(sloc), mode, aggregation)


def category_shares(result: MaturityResult) -> Dict[str, float]:
    total = math.fsum(result.category_deltas.values())
    if total <= 0:
        return {c: 0.0 for c in result.category_deltas}
    return {c: v / total for c, v in result.category_deltas.items()}

