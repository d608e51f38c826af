"""Term-frequency distributions, frequency ranking, and the Zipf log-log fit."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import log
from typing import Iterable, Mapping, NamedTuple

from .corpus import RegionCorpus
from .errors import EmptyCorpusError
from .linfit import line_fit


@dataclass(frozen=True)
class FrequencyTable:
    """Term -> occurrence count over a corpus; total is the sum of counts."""

    entries: Mapping[str, int]
    total: int


class RankedTerm(NamedTuple):
    term: str
    frequency: float
    rank: int


@dataclass(frozen=True)
class RankedTerms:
    """Terms ordered by descending frequency, ranks 1..n."""

    entries: tuple[RankedTerm, ...]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class LogLogFit:
    """ln(frequency) = intercept + slope * ln(rank)."""

    intercept: float
    slope: float
    r_squared: float


def term_frequencies(corpora: Iterable[RegionCorpus]) -> FrequencyTable:
    """Count every token occurrence across all documents of all corpora."""
    counts: Counter[str] = Counter()
    n_docs = 0
    for corpus in corpora:
        n_docs += len(corpus.documents)
        for doc in corpus.documents:
            counts.update(doc.tokens)
    if n_docs == 0 or not counts:
        raise EmptyCorpusError("empty corpus")
    return FrequencyTable(entries=dict(counts), total=sum(counts.values()))


def rank_terms(table: FrequencyTable) -> RankedTerms:
    """Order terms by descending frequency; ties break lexicographically."""
    if not table.entries:
        raise EmptyCorpusError("empty frequency table")
    ordered = sorted(table.entries.items(), key=lambda item: (-item[1], item[0]))
    return RankedTerms(
        entries=tuple(
            RankedTerm(term=t, frequency=f, rank=i)
            for i, (t, f) in enumerate(ordered, start=1)
        )
    )


def fit_zipf(ranked: RankedTerms) -> LogLogFit:
    """OLS of ln(frequency) on ln(rank) over the ranked terms."""
    if len(ranked) < 2:
        raise ValueError("degenerate regression: need at least 2 ranked terms")
    ln_r = [log(entry.rank) for entry in ranked.entries]
    ln_f = [log(entry.frequency) for entry in ranked.entries]
    intercept, slope, r_squared = line_fit(ln_r, ln_f)
    return LogLogFit(intercept=intercept, slope=slope, r_squared=r_squared)
