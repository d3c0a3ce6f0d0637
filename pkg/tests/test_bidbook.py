"""Bid-book legality rules, the activity cap, and grid construction."""

import math

import numpy as np
import pytest

from cmra import (ActivityCapViolation, AdditionalBid, BidBook, CapExceeded,
                  NonMonotoneHeadline, OverLinearPrice, QuantityGrid,
                  money_units)
from cmra.bidbook import BidError, KIND_ADDITIONAL, KIND_HEADLINE, MICRO


class TestQuantityGrid:
    def test_adjusts_resolution_for_exact_points(self):
        g = QuantityGrid(5, 0.75)
        assert g.n == 8 and g.cap_index == 6
        g = QuantityGrid(4, 0.9)
        assert g.n % 10 == 0
        for x in (0.9, 0.1, 0.5):
            g.index(x)  # exact points or it raises

    def test_minimum_resolution(self):
        assert QuantityGrid(1, 0.75).n >= 4

    def test_published_cap_fraction(self):
        # The 2016 sale capped winners at four of seven lots, a 0.57 share
        # once rounded by the regulator; percent caps need a 1/100 grid.
        g = QuantityGrid(20, 0.57)
        assert g.n == 100 and g.cap_index == 57

    def test_off_grid_rejected(self):
        g = QuantityGrid(4, 0.75)
        with pytest.raises(ValueError):
            g.index(0.3)

    def test_irrational_cap_rejected(self):
        with pytest.raises(ValueError):
            QuantityGrid(10, math.pi / 4)


def lots_book():
    # Prices per share of the 4-lot supply: per-lot price x 4.
    return BidBook(QuantityGrid(4, 0.75))


class TestRecordRound:
    def test_truthful_round_at_per_lot_twelve(self):
        book = lots_book()
        book.record_round(48.0, 0.75, [AdditionalBid(0.5, 6.0)])
        assert book.bid_at(0.5) == 6 * MICRO
        assert book.bid_at(0.75) == 36 * MICRO  # 48 * 0.75 linear headline

    def test_empty_package_zero_bid(self):
        book = lots_book()
        book.record_round(10.0, 0.75, [(0.0, 0.0)])
        assert book.bid_at(0.0) == 0
        assert book.kind_at_index(0) == KIND_ADDITIONAL

    def test_over_linear_price_rejected(self):
        book = lots_book()
        with pytest.raises(OverLinearPrice):
            book.record_round(40.0, 0.75, [(0.5, 21.0)])  # 21 > 10 * 2 lots

    def test_rejected_round_rolls_back(self):
        book = lots_book()
        book.record_round(40.0, 0.75)
        with pytest.raises(OverLinearPrice):
            book.record_round(48.0, 0.5, [(0.5, 30.0)])
        assert book.last_price == 40.0
        assert book.last_headline == 3
        assert book.segments == []
        assert book.bid_at(0.5) is None

    def test_cap_exceeded(self):
        book = lots_book()
        with pytest.raises(CapExceeded):
            book.record_round(10.0, 1.0)
        with pytest.raises(CapExceeded):
            book.record_round(10.0, 0.75, [(1.0, 0.0)])

    def test_headline_must_not_rise(self):
        book = lots_book()
        book.record_round(10.0, 0.5)
        with pytest.raises(NonMonotoneHeadline):
            book.record_round(11.0, 0.75)

    def test_clock_must_advance(self):
        book = lots_book()
        book.record_round(10.0, 0.75)
        with pytest.raises(BidError):
            book.record_round(10.0, 0.75)

    def test_negative_amount_rejected(self):
        book = lots_book()
        with pytest.raises(BidError):
            book.record_round(10.0, 0.75, [(0.5, -1.0)])


class TestActivityCap:
    def test_cap_after_drop(self):
        g = QuantityGrid(20, 0.75)
        book = BidBook(g)
        book.record_round(30.0, 0.75)
        book.record_round(40.0, 0.5)  # drop 0.75 -> 0.5 at price 40
        # Strictly between the post- and pre-drop shares the cap binds:
        # recorded B(0.5) plus 40 per share of increment.
        want = book.bid_at(0.5) + money_units(40.0 * 0.1)
        assert book.activity_cap(0.6) == want
        assert want == 24 * MICRO  # B(0.5) = 20 at linear prices
        # Within a round the base includes that round's headline bid at
        # 0.5 (50 * 0.5 = 25), so the cap there is 25 + 4.
        with pytest.raises(ActivityCapViolation):
            book.record_round(50.0, 0.5, [(0.6, 29.001)])
        book.record_round(55.0, 0.5, [(0.6, 29.0)])  # below cap 27.5 + 4

    def test_cap_rises_with_base_bid(self):
        g = QuantityGrid(20, 0.75)
        book = BidBook(g)
        book.record_round(30.0, 0.75)
        book.record_round(40.0, 0.5)
        before = book.activity_cap(0.6)
        book.record_round(50.0, 0.5, [(0.5, 25.0)])  # raise the base bid
        assert book.activity_cap(0.6) == 25 * MICRO + money_units(40.0 * 0.1)
        assert book.activity_cap(0.6) > before

    def test_unbounded_without_drop(self):
        g = QuantityGrid(20, 0.75)
        book = BidBook(g)
        book.record_round(10.0, 0.75)
        book.record_round(20.0, 0.75)
        for x in (0.2, 0.5, 0.7):
            assert book.activity_cap(x) == math.inf

    def test_unbounded_below_drop_target(self):
        g = QuantityGrid(20, 0.75)
        book = BidBook(g)
        book.record_round(30.0, 0.75)
        book.record_round(40.0, 0.5)
        assert book.activity_cap(0.3) == math.inf
        assert book.activity_cap(0.5) == math.inf  # endpoint is not capped

    def test_caps_apply_per_drop_segment(self):
        g = QuantityGrid(20, 0.8)
        book = BidBook(g)
        book.record_round(10.0, 0.8)
        book.record_round(20.0, 0.6)
        book.record_round(30.0, 0.3)
        cap_hi = book.bid_at(0.6) + money_units(20.0 * 0.1)
        cap_lo = book.bid_at(0.3) + money_units(30.0 * 0.2)
        assert book.activity_cap(0.7) == cap_hi
        assert book.activity_cap(0.5) == cap_lo


class TestBidAt:
    def test_fresh_book_is_bottom(self):
        book = lots_book()
        for x in (0.25, 0.5, 0.75):
            assert book.bid_at(x) is None

    def test_lots_truthful_history(self):
        # Replaying the truthful emissions up to $20 per lot leaves a $30
        # bid standing on two lots.
        book = lots_book()
        book.record_round(40.0, 0.75, [(0.5, 0.0)])
        book.record_round(48.0, 0.75, [(0.5, 6.0)])
        book.record_round(80.0, 0.75, [(0.5, 30.0), (0.25, 0.0)])
        assert book.bid_at(0.5) == 30 * MICRO
        assert book.kind_at_index(2) == KIND_ADDITIONAL

    def test_headline_linear_pricing(self):
        g = QuantityGrid(4, 0.75)
        book = BidBook(g)
        book.record_round(0.4, 0.75)
        assert book.bid_at(0.75) == money_units(0.3)
        assert book.kind_at_index(3) == KIND_HEADLINE

    def test_running_maximum(self):
        book = lots_book()
        book.record_round(40.0, 0.75, [(0.5, 5.0)])
        book.record_round(48.0, 0.75, [(0.5, 3.0)])  # lower re-bid ignored
        assert book.bid_at(0.5) == 5 * MICRO
        book.record_round(60.0, 0.75, [(0.5, 9.0)])
        assert book.bid_at(0.5) == 9 * MICRO

    def test_clamped_recording(self):
        g = QuantityGrid(20, 0.75)
        book = BidBook(g)
        book.record_round(30.0, 0.75)
        book.record_round(40.0, 0.5)
        # At price 50 the cap on 0.6 is B(0.5) + 40 * 0.1 = 25 + 4.
        ks = np.array([12], dtype=np.int64)
        book.record_round_indexed(50.0, 10, ks, np.array([40.0]), clamp=True)
        assert book.bid_at(0.6) == 29 * MICRO

    def test_copy_is_independent(self):
        book = lots_book()
        book.record_round(40.0, 0.75, [(0.5, 5.0)])
        dup = book.copy()
        dup.record_round(48.0, 0.5, [(0.25, 2.0)])
        assert book.bid_at(0.25) is None
        assert book.last_headline == 3
        assert dup.bid_at(0.25) == 2 * MICRO
