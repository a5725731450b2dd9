"""Wash-trade flagging.

A trade is a wash when the same account sits on both sides. Flagging is pure
bookkeeping on a ledger restricted to an analysis window; the window is stored
half-open [start, end) in epoch seconds but is normally built from an
inclusive pair of dates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .errors import DataError
from .ingest import DAY, PairedTrade, TradeLedger, fmt_ts, parse_date

DEFAULT_WINDOW_START = "2011-06-26"
DEFAULT_WINDOW_END = "2013-05-20"


@dataclass(frozen=True)
class TimeWindow:
    """Half-open [start, end) in epoch seconds."""

    start: int
    end: int

    def __post_init__(self):
        if self.end <= self.start:
            raise DataError(f"empty window: end {fmt_ts(self.end)} <= start {fmt_ts(self.start)}")

    @classmethod
    def from_dates(cls, first_day: str, last_day: str) -> "TimeWindow":
        """Inclusive calendar dates; last_day's full 24h is inside the window."""
        return cls(parse_date(first_day), parse_date(last_day) + DAY)

    @classmethod
    def default(cls) -> "TimeWindow":
        return cls.from_dates(DEFAULT_WINDOW_START, DEFAULT_WINDOW_END)

    @classmethod
    def parse(cls, text: str) -> "TimeWindow":
        """'YYYY-MM-DD..YYYY-MM-DD', both ends inclusive."""
        first, sep, last = text.partition("..")
        if not sep or not first or not last:
            raise ValueError(f"bad window {text!r}; expected START..END dates")
        return cls.from_dates(first, last)

    def contains(self, ts: int) -> bool:
        return self.start <= ts < self.end

    @property
    def n_days(self) -> int:
        return (self.end - self.start) // DAY


@dataclass
class FlaggedLedger:
    """Window-restricted trades with a wash flag per trade; order preserved."""

    trades: list[PairedTrade]
    wash: list[bool]
    window: TimeWindow

    def __len__(self) -> int:
        return len(self.trades)

    def __iter__(self) -> Iterator[tuple[PairedTrade, bool]]:
        return iter(zip(self.trades, self.wash))

    @property
    def wash_count(self) -> int:
        return sum(self.wash)

    @property
    def nonwash_count(self) -> int:
        return len(self.trades) - self.wash_count

    def wash_trades(self) -> list[PairedTrade]:
        return [t for t, w in zip(self.trades, self.wash) if w]


def flag_wash(ledger: TradeLedger, window: Optional[TimeWindow] = None) -> FlaggedLedger:
    """Restrict to the window and mark buyer == seller trades as wash.

    Pure: the input ledger is not modified, ordering is preserved. The default
    window covers the standard analysis span.
    """
    if window is None:
        window = TimeWindow.default()
    trades = [t for t in ledger.trades if window.contains(t.ts)]
    wash = [t.buyer == t.seller for t in trades]
    return FlaggedLedger(trades, wash, window)
