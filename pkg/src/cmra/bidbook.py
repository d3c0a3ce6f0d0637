"""Per-bidder cumulative bid books on a discrete quantity grid.

A book accumulates one bidder's headline-demand history and additional
package bids round by round, enforcing the auction's legality rules:
additional bids are capped by linear clock prices, headline demand is
non-increasing (eligibility), and bids above the current headline are
constrained by the relative activity cap created by past headline drops.

Money is held internally as integers in small fixed units (micro-units
of the currency by default) so that ties in the closing rule are exact.
An absent bid is an explicit BOTTOM marker (None / a False mask entry),
never a negative sentinel that could leak into arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "MICRO",
    "money_units",
    "BidError",
    "NonMonotoneHeadline",
    "OverLinearPrice",
    "ActivityCapViolation",
    "CapExceeded",
    "QuantityGrid",
    "AdditionalBid",
    "BidBook",
    "KIND_NONE",
    "KIND_HEADLINE",
    "KIND_ADDITIONAL",
]

MICRO = 10 ** 6

KIND_NONE = 0
KIND_HEADLINE = 1
KIND_ADDITIONAL = 2


def money_units(amount: float, scale: int = MICRO) -> int:
    """Round a money amount to integer units (half away from zero)."""
    if amount >= 0:
        return int(math.floor(amount * scale + 0.5))
    return -int(math.floor(-amount * scale + 0.5))


class BidError(ValueError):
    """A submission violates the auction's bidding rules."""


class NonMonotoneHeadline(BidError):
    pass


class OverLinearPrice(BidError):
    pass


class ActivityCapViolation(BidError):
    pass


class CapExceeded(BidError):
    pass


class QuantityGrid:
    """Uniform grid x_k = k/N on [0, 1] with the cap, 1-cap and 1/2 exact.

    The constructor raises N to the nearest multiple that makes those
    three shares exact grid points; N is at least 4.
    """

    def __init__(self, n: int, cap: float):
        frac = Fraction(cap).limit_denominator(10 ** 4)
        if abs(float(frac) - cap) > 1e-12:
            raise ValueError(f"cap {cap} is not a small rational")
        base = math.lcm(frac.denominator, 2)
        n = max(int(n), 4)
        self.n = ((n + base - 1) // base) * base
        self.cap = cap
        self.cap_index = (self.n * frac.numerator) // frac.denominator

    def index(self, x: float) -> int:
        """Exact grid index of share x; off-grid quantities are rejected."""
        k = round(x * self.n)
        if abs(x - k / self.n) > 1e-9:
            raise ValueError(f"quantity {x} is off the 1/{self.n} grid")
        if not 0 <= k <= self.n:
            raise ValueError(f"quantity {x} outside [0, 1]")
        return k

    def share(self, k: int) -> float:
        return k / self.n

    def __repr__(self):
        return f"QuantityGrid(n={self.n}, cap={self.cap})"


@dataclass(frozen=True)
class AdditionalBid:
    """A pay-as-bid package bid: quantity share, amount, submission price."""

    quantity: float
    amount: float
    price: float | None = None


class BidBook:
    """Running per-grid-point maximum of one bidder's bids.

    The stored value at grid point k is the highest amount (in integer
    money units) bid on k so far, via either a linearly priced headline
    submission or an additional bid; unbid points carry no value.
    """

    def __init__(self, grid: QuantityGrid, scale: int = MICRO):
        self.grid = grid
        self.scale = scale
        n = grid.n
        self.values = np.zeros(n + 1, dtype=np.int64)
        self.has_bid = np.zeros(n + 1, dtype=bool)
        self.kinds = np.zeros(n + 1, dtype=np.int8)
        self.headline_history: list[tuple[float, int]] = []
        # Drop segments (lo_k, hi_k, drop_price): the headline fell from
        # hi to lo at drop_price; bids strictly inside are capped.  The
        # headline is non-increasing, so segments never overlap and each
        # grid point belongs to at most one; per-point arrays make the
        # cap an O(1) lookup.
        self.segments: list[tuple[int, int, float]] = []
        self._seg_lo = np.full(n + 1, -1, dtype=np.int64)
        self._seg_base = np.zeros(n + 1, dtype=np.int64)
        self.last_price: float | None = None
        self.last_headline: int | None = None

    # -- queries ------------------------------------------------------

    def bid_at_index(self, k: int):
        """Recorded maximum at grid index k, or None if never bid (BOTTOM)."""
        return int(self.values[k]) if self.has_bid[k] else None

    def bid_at(self, x: float):
        return self.bid_at_index(self.grid.index(x))

    def kind_at_index(self, k: int) -> int:
        return int(self.kinds[k])

    def activity_cap_index(self, k: int):
        """Relative cap (in money units) on bids at index k, or inf if unbounded.

        After a headline drop from hi to lo at price q, a bid on k
        strictly between them may not exceed the current bid at lo plus
        q times the quantity increment.  Caps from distinct drops apply
        per segment.
        """
        lo = int(self._seg_lo[k])
        if lo < 0:
            return math.inf
        return int(self.values[lo]) + int(self._seg_base[k])

    def activity_caps_array(self, unbounded: int) -> np.ndarray:
        """All per-point caps at once, with ``unbounded`` where no cap binds."""
        lo = np.maximum(self._seg_lo, 0)
        caps = self.values[lo] + self._seg_base
        return np.where(self._seg_lo >= 0, caps, unbounded)

    def activity_cap(self, x: float, current_clock: float | None = None):
        return self.activity_cap_index(self.grid.index(x))

    def arrays(self):
        """(values, mask) view for the closing solver; treat as read only."""
        return self.values, self.has_bid

    def copy(self) -> "BidBook":
        dup = BidBook.__new__(BidBook)
        dup.grid = self.grid
        dup.scale = self.scale
        dup.values = self.values.copy()
        dup.has_bid = self.has_bid.copy()
        dup.kinds = self.kinds.copy()
        dup.headline_history = list(self.headline_history)
        dup.segments = list(self.segments)
        dup._seg_lo = self._seg_lo.copy()
        dup._seg_base = self._seg_base.copy()
        dup.last_price = self.last_price
        dup.last_headline = self.last_headline
        return dup

    # -- updates ------------------------------------------------------

    def record_round(self, clock_price: float, headline_quantity: float,
                     additional_bids=()) -> "BidBook":
        """Record one clock round: headline demand plus any additional bids.

        The clock price must exceed the previous round's, the headline
        must be a grid point weakly below both the cap and the previous
        headline, and every additional bid must satisfy the linear-price
        rule and the activity cap.  Returns self for chaining.
        """
        k = self.grid.index(headline_quantity)
        ks, amounts = _normalize_bids(additional_bids, self.grid)
        self.record_round_indexed(clock_price, k, ks, amounts)
        return self

    def record_round_indexed(self, clock_price: float, headline_k: int,
                             ks: np.ndarray, amounts: np.ndarray,
                             clamp: bool = False) -> None:
        """Array fast path used by the auction engine; bids as grid indices.

        With ``clamp=True`` over-limit amounts are reduced to the legal
        maximum instead of raising; the engine uses this because proxy
        emissions saturate the relative cap and grid rounding can
        overshoot it by a fraction of a money unit.
        """
        if self.last_price is not None and clock_price <= self.last_price:
            raise BidError(
                f"clock price {clock_price} does not exceed previous {self.last_price}"
            )
        if headline_k > self.grid.cap_index:
            raise CapExceeded("headline demand exceeds the quantity cap")
        if self.last_headline is not None and headline_k > self.last_headline:
            raise NonMonotoneHeadline(
                f"headline rose from {self.last_headline} to {headline_k}"
            )

        dropped = self.last_headline is not None and headline_k < self.last_headline
        if dropped:
            self.segments.append((headline_k, self.last_headline, clock_price))
            n = self.grid.n
            for k in range(headline_k + 1, self.last_headline):
                self._seg_lo[k] = headline_k
                self._seg_base[k] = money_units(
                    clock_price * (k - headline_k) / n, self.scale)

        # Headline bid at linear clock prices, recorded before additional
        # bids so the activity cap sees this round's base value.  Saved
        # state lets a rejected round roll back atomically.
        saved = (bool(self.has_bid[headline_k]), int(self.values[headline_k]),
                 int(self.kinds[headline_k]))
        self._post(headline_k, money_units(
            clock_price * headline_k / self.grid.n, self.scale), KIND_HEADLINE)

        if len(ks):
            try:
                units = self._admit_additional(clock_price, ks, amounts, clamp)
            except BidError:
                self.has_bid[headline_k], self.values[headline_k], \
                    self.kinds[headline_k] = saved
                if dropped:
                    lo, hi, _ = self.segments.pop()
                    self._seg_lo[lo + 1: hi] = -1
                    self._seg_base[lo + 1: hi] = 0
                raise
            prev = np.where(self.has_bid, self.values, np.int64(-1))
            after = prev.copy()
            np.maximum.at(after, ks, units)
            raised = after > prev
            self.values[raised] = after[raised]
            self.has_bid[raised] = True
            self.kinds[raised] = KIND_ADDITIONAL

        self.headline_history.append((clock_price, headline_k))
        self.last_price = clock_price
        self.last_headline = headline_k

    def _post(self, k: int, units: int, kind: int) -> None:
        if not self.has_bid[k] or units > self.values[k]:
            self.values[k] = units
            self.has_bid[k] = True
            self.kinds[k] = kind

    def _admit_additional(self, price: float, ks: np.ndarray,
                          amounts: np.ndarray, clamp: bool) -> np.ndarray:
        """Money units for each additional bid, validated or clamped legal."""
        n = self.grid.n
        if np.any(ks > self.grid.cap_index):
            raise CapExceeded("additional bid above the quantity cap")
        if np.any(amounts < 0):
            raise BidError("bid amounts must be non-negative")
        units = np.floor(amounts * self.scale + 0.5).astype(np.int64)
        lin = np.floor(price * ks / n * self.scale + 0.5).astype(np.int64)
        lo = self._seg_lo[ks]
        act = np.where(lo >= 0,
                       self.values[np.maximum(lo, 0)] + self._seg_base[ks],
                       np.int64(2 ** 62))
        if clamp:
            return np.minimum(units, np.minimum(lin, act))
        over_lin = units > lin
        if over_lin.any():
            i = int(np.argmax(over_lin))
            raise OverLinearPrice(
                f"bid {amounts[i]} on {ks[i]}/{n} exceeds the linear price "
                f"{price * ks[i] / n}")
        over_act = units > act
        if over_act.any():
            i = int(np.argmax(over_act))
            raise ActivityCapViolation(
                f"bid {amounts[i]} on {ks[i]}/{n} exceeds the relative cap "
                f"{act[i] / self.scale}")
        return units


def _normalize_bids(additional_bids, grid: QuantityGrid):
    ks, amounts = [], []
    for bid in additional_bids:
        if isinstance(bid, AdditionalBid):
            x, a = bid.quantity, bid.amount
        else:
            x, a = bid
        ks.append(grid.index(x))
        amounts.append(float(a))
    return np.asarray(ks, dtype=np.int64), np.asarray(amounts, dtype=float)
