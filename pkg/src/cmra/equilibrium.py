"""Numerical verification of equilibrium claims by deviation search.

The central routine, :func:`check_expost`, sweeps a grid of type pairs
and, for every pair and every seat, searches a family of unilateral
deviations against a fixed proxy-strategy profile:

* headline-drop policies (drop to quantity y once the clock reaches q),
* single-package deviating bids (one pay-as-bid bid of a given amount
  on a given quantity from a given submission price, with no other
  additional bids).

A profile is verified when no deviation in the family gains more than
the tolerance for any type pair, and refuted when some deviation does.

The search is exact about engine semantics without simulating every
family member: both bidders' books along the clock ladder are replayed
once per type, deviations are then screened vectorially against those
ladders (the screen reproduces the engine's per-tick closing test), and
every member whose optimistic surplus bound clears the tolerance is
re-run through the real auction engine.  Reported gains always come
from such engine replays, so any reported deviation is reproducible.

The module also houses the collusion-threshold analysis for the
riskless demand-reduction strategy and the VCG outcome-equivalence
check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .bidbook import BidBook, QuantityGrid, money_units
from .mechanism import AuctionConfig, run_cmra
from .strategies import STRATEGY_TAGS, ProxyStrategy
from .valuation import AssumptionViolation, MarketEnv, ValuationModel

__all__ = [
    "Deviation",
    "DeviationFamily",
    "DeviationReport",
    "ExPostResult",
    "check_expost",
    "minimal_winning_bid",
    "rdr_threshold",
    "check_rdr_bne",
    "RdrBneReport",
    "vcg_equivalence_check",
    "replay_deviation",
    "HeadlineOnly",
    "DropPolicy",
    "SingleBidDeviation",
]

_NEG = np.int64(-(2 ** 53))
_BIG = np.int64(2 ** 53)


# -- deviation strategies ---------------------------------------------

class HeadlineOnly(ProxyStrategy):
    """The profile's headline path with all additional bids suppressed."""

    tag = "headline-only"

    def __init__(self, base: ProxyStrategy):
        super().__init__(base.model, base.grid)
        self._base = base

    def headline_index(self, p: float) -> int:
        return self._base.headline_index(p)


class DropPolicy(ProxyStrategy):
    """Headline capped at drop_k once the clock reaches drop_price."""

    tag = "drop"

    def __init__(self, base: ProxyStrategy, drop_price: float, drop_k: int):
        super().__init__(base.model, base.grid)
        self._base = base
        self.drop_price = drop_price
        self.drop_k = drop_k

    def headline_index(self, p: float) -> int:
        h = self._base.headline_index(p)
        if p >= self.drop_price - 1e-15:
            return min(h, self.drop_k)
        return h


class SingleBidDeviation(ProxyStrategy):
    """Profile headline plus exactly one package bid from a given price."""

    tag = "single-bid"

    def __init__(self, base: ProxyStrategy, quantity_k: int, amount: float,
                 submit_price: float):
        super().__init__(base.model, base.grid)
        self._base = base
        self.quantity_k = quantity_k
        self.amount = amount
        self.submit_price = submit_price
        self._ks = np.array([quantity_k], dtype=np.int64)
        self._amts = np.array([amount], dtype=float)

    def headline_index(self, p: float) -> int:
        return self._base.headline_index(p)

    def additional_bid_arrays(self, p: float):
        if p >= self.submit_price - 1e-15:
            return self._ks, self._amts
        return super().additional_bid_arrays(p)


@dataclass(frozen=True)
class Deviation:
    """Descriptor of one deviation; replayable through the engine."""

    kind: str                       # 'headline-only' | 'drop' | 'single-bid'
    drop_price: float | None = None
    drop_k: int | None = None
    quantity_k: int | None = None
    amount: float | None = None
    submit_price: float | None = None

    def build(self, base: ProxyStrategy) -> ProxyStrategy:
        if self.kind == "headline-only":
            return HeadlineOnly(base)
        if self.kind == "drop":
            return DropPolicy(base, self.drop_price, self.drop_k)
        if self.kind == "single-bid":
            return SingleBidDeviation(base, self.quantity_k, self.amount,
                                      self.submit_price)
        raise ValueError(f"unknown deviation kind {self.kind!r}")


@dataclass(frozen=True)
class DeviationFamily:
    """Grids spanning the searched deviations.

    Quantities default to the whole bid grid up to the cap; amounts are
    evenly spaced levels between zero and the legal maximum at the
    submission price; submission and drop prices are evenly spaced
    clock ticks.
    """

    n_amounts: int = 50
    n_submit_prices: int = 20
    n_drop_prices: int = 20
    bid_quantities: tuple | None = None      # grid indices, default 1..cap
    drop_quantities: tuple | None = None     # grid indices, default 0..cap-1


@dataclass
class DeviationReport:
    """Best deviation found for one deviator type in one seat."""

    deviator_theta: float
    seat: int
    baseline: dict = field(default_factory=dict)       # opp theta -> surplus
    best_gain: float = -math.inf
    best_opponent: float | None = None
    best_deviation: Deviation | None = None
    best_surplus: float | None = None
    by_opponent: dict = field(default_factory=dict)    # opp theta -> gain bound


@dataclass
class ExPostResult:
    """Aggregate verdict of one profile check on a type grid."""

    profile: str
    regime: str
    tol: float
    max_gain: float
    verified: bool
    reports: dict
    replays: int
    members: int
    truncated: bool = False

    def __str__(self):
        verdict = "no profitable deviation found" if self.verified \
            else "profitable deviation found"
        return (f"{self.profile} ({self.regime}): {verdict}; "
                f"max gain {self.max_gain:.3e} at tol {self.tol:g} "
                f"({self.members} deviations screened, {self.replays} replayed)")


def replay_deviation(profile: str, env: MarketEnv, seat: int,
                     deviation: Deviation, config: AuctionConfig,
                     theta_pair: tuple | None = None):
    """Re-run one deviation through the auction engine.

    Returns (outcome, deviator surplus).  ``theta_pair`` overrides the
    environment models' types as (deviator theta, opponent theta).
    """
    make = STRATEGY_TAGS[profile]
    grid = config.grid
    mdev, mopp = env.models[seat], env.models[1 - seat]
    if theta_pair is not None:
        mdev = mdev.with_theta(theta_pair[0])
        mopp = mopp.with_theta(theta_pair[1])
    dev = deviation.build(make(mdev, grid))
    opp = make(mopp, grid)
    pair = (dev, opp) if seat == 0 else (opp, dev)
    models = (mdev, mopp) if seat == 0 else (mopp, mdev)
    run_cfg = AuctionConfig(grid=grid, eps=config.eps, max_price=config.max_price,
                            start=config.start, refine=config.refine,
                            refine_tol=config.refine_tol,
                            money_scale=config.money_scale, log_rounds=False)
    out = run_cmra(pair[0], pair[1], env, run_cfg)
    return out, out.surplus(models)[seat]


# -- ladder replays ---------------------------------------------------

class _Ladder:
    """Book state of one strategy at every clock tick."""

    def __init__(self, strategy, prices, grid, scale, with_caps=False):
        book = BidBook(grid, scale)
        t_n = len(prices)
        width = grid.n + 1
        self.values = np.zeros((t_n, width), dtype=np.int64)
        self.mask = np.zeros((t_n, width), dtype=bool)
        self.caps = np.full((t_n, width), _BIG, dtype=np.int64) if with_caps else None
        self.kpath = np.zeros(t_n, dtype=np.int64)
        for t, p in enumerate(prices):
            p = float(p)
            ks, amounts = strategy.additional_bid_arrays(p)
            k = strategy.headline_index(p)
            book.record_round_indexed(p, k, ks, amounts, clamp=True)
            self.values[t] = book.values
            self.mask[t] = book.has_bid
            self.kpath[t] = k
            if with_caps:
                self.caps[t] = book.activity_caps_array(_BIG)


def _first_true(mask_1d):
    idx = np.nonzero(mask_1d)[0]
    return int(idx[0]) if idx.size else None


# -- the per-pair screen ----------------------------------------------

class _PairScreen:
    """Vectorized screen of the deviation family for one type pair.

    Mirrors the engine's per-tick closing test on replayed ladders and
    produces an optimistic surplus bound per family member; members
    whose bound clears the cutoff are replayed through the engine.  The
    closing test is seat-symmetric; seat-dependent tie-breaks only ever
    matter for members that get replayed anyway.
    """

    def __init__(self, dev_lad: _Ladder, opp_lad: _Ladder,
                 prices, grid: QuantityGrid, scale: int, u_dev: np.ndarray):
        self.prices = prices
        self.grid = grid
        self.scale = scale
        self.u_dev = u_dev
        n = grid.n

        self.hd = np.where(dev_lad.mask, dev_lad.values, _NEG)
        self.md = dev_lad.mask
        self.dev_vals = dev_lad.values
        self.dev_caps = dev_lad.caps
        self.kpath = dev_lad.kpath

        self.bo = opp_lad.values
        self.mo = opp_lad.mask
        om = np.where(self.mo, self.bo, _NEG)
        self.po = np.maximum.accumulate(om, axis=1)
        self.po_has = np.logical_or.accumulate(self.mo, axis=1)
        self.po_rev = self.po[:, ::-1]
        self.po_has_rev = self.po_has[:, ::-1]
        self.max_o = om.max(axis=1)

        self.max_h = self.hd.max(axis=1)
        pair_hh = np.where(self.md & self.po_has_rev, self.dev_vals + self.po_rev,
                           _NEG)
        self.hh = pair_hh.max(axis=1)
        self.s = np.maximum(self.max_h, self.max_o)
        self.t0 = _first_true((self.hh > _NEG // 2) & (self.hh >= self.s))

        # Ceiling on the deviator's surplus when a pair closes at tick t.
        # The accepted pair (y, partner) satisfies payment_dev =
        # R* - B_opp(partner), books at the refined price sit between
        # ticks t-1 and t, and R* is at least the opponent's best single
        # one tick earlier; hence
        #   surplus <= max over feasible pairs of [U(y) + B_opp(partner; t)]
        #              - max B_opp(.; t-1).
        self.r_floor = np.zeros(len(prices))
        self.r_floor[1:] = np.maximum(self.max_o[:-1], 0) / scale
        pair_w = np.where(self.md & self.po_has_rev,
                          u_dev[None, :] + self.po_rev / scale, -np.inf)
        self.hh_opt = pair_w.max(axis=1) - self.r_floor

    # -- family screens ------------------------------------------------

    def screen_single_bids(self, family: DeviationFamily, t_hats, baseline,
                           cutoff, out):
        """Single-package deviations: quantity x amount x submission price."""
        n = self.grid.n
        quants = family.bid_quantities or range(1, self.grid.cap_index + 1)
        for k_hat in quants:
            hk = self.hd[:, k_hat]
            qcol = self.po[:, n - k_hat]
            qhas = self.po_has[:, n - k_hat]
            u_k = self.u_dev[k_hat]
            for t_hat in t_hats:
                if self.t0 is not None and self.t0 < t_hat:
                    # Closes before the bid is ever submitted: outcome is
                    # exactly the headline-only one, reported once.
                    out.members += family.n_amounts
                    continue
                cap = min(money_units(self.prices[t_hat] * k_hat / n, self.scale),
                          int(self.dev_caps[t_hat, k_hat]))
                if cap < 0:
                    continue
                levels = np.unique(np.linspace(0, cap, family.n_amounts)
                                   .round().astype(np.int64))
                out.members += levels.size
                # A bid at or below the deviator's recorded headline value
                # never changes the book: identical to headline-only play.
                if self.md[t_hat, k_hat]:
                    levels = levels[levels > self.dev_vals[t_hat, k_hat]]
                    if not levels.size:
                        continue
                a = levels[:, None]
                vhat = np.maximum(hk[None, :], a)
                pair2 = np.where(qhas[None, :], vhat + qcol[None, :], _NEG)
                lhs = np.maximum(self.hh[None, :], pair2)
                rhs = np.maximum(self.s[None, :], a)
                closed = (lhs > _NEG // 2) & (lhs >= rhs)
                closed[:, :t_hat] = False
                any_close = closed.any(axis=1)
                t_close = np.argmax(closed, axis=1)
                for i, amt_units in enumerate(levels):
                    if not any_close[i]:
                        continue  # never closes: the deviator wins nothing
                    tc = int(t_close[i])
                    if int(pair2[i, tc]) < int(self.hh[tc]) \
                            and self.t0 is not None and tc == self.t0:
                        # The extra bid is in no revenue-maximizing pair:
                        # outcome identical to the headline-only deviation.
                        continue
                    pay_lb = max(int(amt_units),
                                 int(self.dev_vals[tc - 1, k_hat])
                                 if tc > 0 and self.md[tc - 1, k_hat] else 0)
                    win_opt = u_k - pay_lb / self.scale
                    opt = max(win_opt, float(self.hh_opt[tc]))
                    if opt - baseline > cutoff:
                        out.add(opt - baseline, Deviation(
                            "single-bid", quantity_k=k_hat,
                            amount=int(amt_units) / self.scale,
                            submit_price=float(self.prices[t_hat])))

    def screen_drops(self, family: DeviationFamily, drop_ticks, baseline,
                     cutoff, out):
        """Headline-drop policies, screened jointly across the policy grid."""
        n = self.grid.n
        t_n = len(self.prices)
        ys = np.asarray(family.drop_quantities
                        if family.drop_quantities is not None
                        else range(0, self.grid.cap_index), dtype=np.int64)
        tq = np.asarray(drop_ticks, dtype=np.int64)
        d_y, d_t = np.meshgrid(ys, tq, indexing="ij")
        d_y, d_t = d_y.ravel(), d_t.ravel()
        n_pol = d_y.size
        out.members += n_pol

        steps = np.arange(t_n)
        mp = np.where(steps[None, :] >= d_t[:, None],
                      np.minimum(self.kpath[None, :], d_y[:, None]),
                      self.kpath[None, :])
        hu = np.floor(self.prices[None, :] * mp / n * self.scale + 0.5) \
            .astype(np.int64)
        max_d = np.maximum.accumulate(hu, axis=1)

        vals = np.full((n_pol, n + 1), 0, dtype=np.int64)
        mask = np.zeros((n_pol, n + 1), dtype=bool)
        rows = np.arange(n_pol)
        hh_d = np.empty((n_pol, t_n), dtype=np.int64)
        w_d = np.empty((n_pol, t_n))
        u_row = self.u_dev[None, :]
        for t in range(t_n):
            kt = mp[:, t]
            better = ~mask[rows, kt] | (hu[:, t] > vals[rows, kt])
            vals[rows[better], kt[better]] = hu[better, t]
            mask[rows, kt] = True
            feas = mask & self.po_has_rev[t][None, :]
            hh_d[:, t] = np.where(feas, vals + self.po_rev[t][None, :],
                                  _NEG).max(axis=1)
            w_d[:, t] = np.where(feas, u_row + self.po_rev[t][None, :]
                                 / self.scale, -np.inf).max(axis=1)
        s_d = np.maximum(max_d, self.max_o[None, :])
        closed = (hh_d > _NEG // 2) & (hh_d >= s_d)
        any_close = closed.any(axis=1)
        t_close = np.argmax(closed, axis=1)

        for j in range(n_pol):
            if not any_close[j]:
                continue
            tc = int(t_close[j])
            if np.array_equal(mp[j, : tc + 1], self.kpath[: tc + 1]):
                # Drop never binds before the close: headline-only outcome.
                continue
            opt = float(w_d[j, tc]) - float(self.r_floor[tc])
            if opt - baseline > cutoff:
                out.add(opt - baseline, Deviation(
                    "drop", drop_price=float(self.prices[d_t[j]]),
                    drop_k=int(d_y[j])))


class _Candidates:
    """Collects screened members whose bound clears the cutoff."""

    def __init__(self):
        self.items = []
        self.members = 0

    def add(self, opt_gain, deviation):
        self.items.append((opt_gain, deviation))

    def top(self, cap):
        ranked = sorted(self.items, key=lambda it: -it[0])
        return ranked[:cap], len(ranked) > cap


# -- the profile check ------------------------------------------------

def check_expost(profile: str, env: MarketEnv, config: AuctionConfig,
                 theta_grid: int = 11, family: DeviationFamily | None = None,
                 tol: float = 1e-4, replay_cap: int = 400,
                 stop_at_gain: float | None = None,
                 seats: tuple = (0, 1)) -> ExPostResult:
    """Search for profitable unilateral deviations from a strategy profile.

    For every ordered type pair on the grid and every seat, the family
    of deviations is screened against the profile and near-profitable
    members are replayed through the engine.  The profile is verified
    when no replayed gain exceeds ``tol``.  With ``stop_at_gain`` set,
    the sweep stops as soon as a replayed gain exceeds it (refutation
    mode).
    """
    family = family or DeviationFamily()
    make = STRATEGY_TAGS[profile]
    grid = config.grid
    scale = config.money_scale
    lo, hi = env.distribution.support
    thetas = [lo + (hi - lo) * i / (theta_grid - 1) for i in range(theta_grid)] \
        if theta_grid > 1 else [0.5 * (lo + hi)]

    t_n = int(math.floor((config.max_price - config.start) / config.eps)) + 1
    prices = config.start + config.eps * np.arange(t_n)
    t_hats = sorted({int(round(i)) for i in
                     np.linspace(0, t_n - 1, family.n_submit_prices)})
    drop_ticks = sorted({int(round(i)) for i in
                         np.linspace(0, t_n - 1, family.n_drop_prices)})

    base_model = env.models[0]
    models = {th: base_model.with_theta(th) for th in thetas}
    u_dev = {th: np.array([models[th].value(grid.share(k))
                           for k in range(grid.n + 1)]) for th in thetas}
    # One strategy instance per type: their price-indexed emissions are
    # memoized, so ladders, baselines and replays share the work.
    strat = {th: make(models[th], grid) for th in thetas}
    full_lad = {th: _Ladder(strat[th], prices, grid, scale) for th in thetas}
    head_lad = {th: _Ladder(HeadlineOnly(strat[th]), prices, grid,
                            scale, with_caps=True) for th in thetas}

    run_cfg = AuctionConfig(grid=grid, eps=config.eps, max_price=config.max_price,
                            start=config.start, refine=config.refine,
                            refine_tol=config.refine_tol, money_scale=scale,
                            log_rounds=False)
    baselines = {}

    def baseline_run(th1, th2):
        key = (th1, th2)
        if key not in baselines:
            out = run_cmra(strat[th1], strat[th2], env, run_cfg)
            baselines[key] = out.surplus((models[th1], models[th2]))
        return baselines[key]

    def fast_replay(seat, deviation, th_dev, th_opp):
        dev = deviation.build(strat[th_dev])
        pair = (dev, strat[th_opp]) if seat == 0 else (strat[th_opp], dev)
        out = run_cmra(pair[0], pair[1], env, run_cfg)
        pair_models = (models[th_dev], models[th_opp]) if seat == 0 \
            else (models[th_opp], models[th_dev])
        return out.surplus(pair_models)[seat]

    reports = {}
    max_gain = -math.inf
    replays = 0
    members = 0
    truncated = False
    cutoff = tol / 2

    for seat in seats:
        for th_dev in thetas:
            report = DeviationReport(deviator_theta=th_dev, seat=seat)
            reports[(th_dev, seat)] = report
            for th_opp in thetas:
                pair = (th_dev, th_opp) if seat == 0 else (th_opp, th_dev)
                baseline = baseline_run(*pair)[seat]
                report.baseline[th_opp] = baseline

                screen = _PairScreen(head_lad[th_dev], full_lad[th_opp],
                                     prices, grid, scale, u_dev[th_dev])
                cands = _Candidates()
                # The bare headline-only deviation.
                cands.members += 1
                if screen.t0 is not None:
                    opt0 = float(screen.hh_opt[screen.t0]) - baseline
                    if opt0 > cutoff:
                        cands.add(opt0, Deviation("headline-only"))
                screen.screen_single_bids(family, t_hats, baseline, cutoff, cands)
                screen.screen_drops(family, drop_ticks, baseline, cutoff, cands)
                members += cands.members

                top, cut = cands.top(replay_cap)
                truncated = truncated or cut
                best_here = -math.inf
                for opt_gain, dev in top:
                    surplus = fast_replay(seat, dev, th_dev, th_opp)
                    replays += 1
                    gain = surplus - baseline
                    if gain > best_here:
                        best_here = gain
                    if gain > report.best_gain:
                        report.best_gain = gain
                        report.best_opponent = th_opp
                        report.best_deviation = dev
                        report.best_surplus = surplus
                    if gain > max_gain:
                        max_gain = gain
                    if stop_at_gain is not None and gain > stop_at_gain:
                        report.by_opponent[th_opp] = gain
                        return ExPostResult(
                            profile, env.regime, tol, max_gain, False,
                            reports, replays, members, truncated)
                report.by_opponent[th_opp] = best_here if top else -math.inf
    if max_gain == -math.inf:
        max_gain = 0.0  # nothing screened above the cutoff anywhere
    return ExPostResult(profile, env.regime, tol, max_gain,
                        max_gain <= tol, reports, replays, members, truncated)


# -- closed-form deviation oracle --------------------------------------

def minimal_winning_bid(opponent_model: ValuationModel, x: float,
                        clock_price: float,
                        opponent_tag: str = "cmra-truthful") -> float:
    """Smallest amount that makes winning x revenue-maximizing.

    Against an opponent holding headline demand at the cap and bidding
    per ``opponent_tag`` ('cmra-truthful' or 'constant'), the bid on x
    must lift the split (x, 1-x) to the opponent's best single-bid
    revenue at the given clock price; clamped at zero.  Raises when the
    opponent holds no bid on 1 - x there.
    """
    lam = opponent_model.cap
    if x > lam + 1e-12:
        raise ValueError("quantity above the cap")
    partner = 1.0 - x
    if opponent_tag == "cmra-truthful":
        v = opponent_model.indirect_surplus(clock_price)
        if opponent_model.value(partner) < v - 1e-12:
            raise ValueError("opponent holds no bid on the residual share")
        partner_bid = opponent_model.value(partner) - v
        best_single = opponent_model.value(lam) - v
    elif opponent_tag == "constant":
        exit_price = opponent_model.value(lam) / lam
        best_single = min(clock_price, exit_price) * lam
        if abs(partner - lam) < 1e-12:
            partner_bid = best_single
        elif abs(partner - (1.0 - lam)) < 1e-12:
            if clock_price < opponent_model.final_price() - 1e-12:
                raise ValueError("opponent has not yet bid on 1 - cap")
            partner_bid = 0.0
        else:
            raise ValueError("opponent holds no bid on the residual share")
    else:
        raise ValueError(f"unsupported opponent strategy {opponent_tag!r}")
    return max(0.0, best_single - partner_bid)


# -- riskless demand reduction ------------------------------------------

def _require_normalized_linear(model: ValuationModel) -> None:
    """The collusion threshold needs U linear in theta with unit spread."""
    lam = model.cap
    for th in (0.3, 0.7, 1.0):
        m = model.with_theta(th)
        spread = m.value(lam) - m.value(1.0 - lam)
        if abs(spread - th) > 1e-9:
            raise AssumptionViolation(
                "valuation family must satisfy U(cap) - U(1-cap) = theta")
        if abs(m.value(0.4) - th * model.with_theta(1.0).value(0.4)) > 1e-9:
            raise AssumptionViolation("valuation family must be linear in theta")


def rdr_threshold(env: MarketEnv) -> float:
    """Expected-opponent-type threshold sustaining riskless demand reduction.

    Both bidders splitting the supply in half at a price of zero is a
    Bayes-Nash equilibrium iff E(theta) >= U(cap; theta_hi) - U(1/2; theta_hi)
    for the top type theta_hi of the support.
    """
    model = env.models[0]
    _require_normalized_linear(model)
    top = model.theta_support[1]
    m = model.with_theta(top)
    return m.value(env.cap) - m.value(0.5)


@dataclass
class RdrBneReport:
    threshold: float
    mean_type: float
    holds: bool
    binding_theta: float
    slack_at_top: float
    min_slack: float
    quad_deviation_payoff: float
    mc_deviation_payoff: float
    mc_stderr: float
    mc_agrees: bool
    engine_checked: int
    engine_max_err: float


def check_rdr_bne(env: MarketEnv, samples: int = 100_000, seed: int = 0,
                  config: AuctionConfig | None = None,
                  theta_points: int = 41, engine_samples: int = 200
                  ) -> RdrBneReport:
    """Collusion incentive check by quadrature and by Monte Carlo.

    For each deviator type the collusive payoff U(1/2) is compared with
    the expected payoff of abandoning the reduction (which reverts play
    to the constant-strategy outcome): F(t)*t + U(1-cap) - E[theta_j;
    theta_j <= t].  The same deviation payoff is estimated by Monte
    Carlo over opponent types, with a seeded subsample re-run through
    the actual auction engine to pin the per-draw outcome formula.
    """
    model = env.models[0]
    _require_normalized_linear(model)
    dist = env.distribution
    if dist.kind != "uniform":
        raise AssumptionViolation("quadrature check needs a uniform type distribution")
    lo, hi = dist.support
    lam = env.cap

    def ic_slack(t):
        m = model.with_theta(t)
        partial = integrate.quad(lambda u: u * dist.pdf(u), lo, t)[0]
        deviation = dist.cdf(t) * t + m.value(1.0 - lam) - partial
        return m.value(0.5) - deviation

    thetas = [lo + (hi - lo) * i / (theta_points - 1) for i in range(theta_points)]
    slacks = [ic_slack(t) for t in thetas]
    # Ties in the minimum go to the strongest type: it is the one whose
    # incentive constraint the threshold condition is built around.
    min_i = len(slacks) - 1 - int(np.argmin(slacks[::-1]))
    top = hi
    m_top = model.with_theta(top)
    quad_dev = dist.cdf(top) * top + m_top.value(1.0 - lam) \
        - integrate.quad(lambda u: u * dist.pdf(u), lo, top)[0]

    # Monte Carlo for the top type: draw opponents, apply the per-draw
    # outcome, and validate the outcome formula on an engine subsample.
    rng = np.random.default_rng(seed)
    draws = np.asarray(dist.sample(rng, samples), dtype=float)
    spread = np.array([model.with_theta(t).value(lam)
                       - model.with_theta(t).value(1.0 - lam) for t in (1.0,)])
    payoff = np.where(
        draws <= top,
        m_top.value(lam) - draws * spread[0],
        m_top.value(1.0 - lam))
    mc_mean = float(payoff.mean())
    mc_se = float(payoff.std(ddof=1) / math.sqrt(samples))

    engine_max_err = 0.0
    checked = 0
    if config is not None and engine_samples > 0:
        make_const = STRATEGY_TAGS["constant"]
        make_rdr = STRATEGY_TAGS["rdr"]
        grid = config.grid
        run_cfg = AuctionConfig(grid=grid, eps=config.eps,
                                max_price=config.max_price, start=config.start,
                                refine=config.refine, refine_tol=config.refine_tol,
                                money_scale=config.money_scale, log_rounds=False)
        for th_j in draws[:engine_samples]:
            opp = model.with_theta(float(th_j))
            out = run_cmra(make_const(m_top, grid), make_rdr(opp, grid),
                           env, run_cfg)
            got = out.surplus((m_top, opp))[0]
            want = m_top.value(lam) - float(th_j) * spread[0] if th_j <= top \
                else m_top.value(1.0 - lam)
            engine_max_err = max(engine_max_err, abs(got - want))
            checked += 1

    return RdrBneReport(
        threshold=rdr_threshold(env),
        mean_type=dist.mean(),
        holds=min(slacks) >= -1e-9,
        binding_theta=thetas[min_i],
        slack_at_top=ic_slack(top),
        min_slack=min(slacks),
        quad_deviation_payoff=quad_dev,
        mc_deviation_payoff=mc_mean,
        mc_stderr=mc_se,
        mc_agrees=abs(mc_mean - quad_dev) <= 3.0 * mc_se + 1e-12,
        engine_checked=checked,
        engine_max_err=engine_max_err)


# -- VCG equivalence ----------------------------------------------------

def vcg_equivalence_check(env: MarketEnv, config: AuctionConfig,
                          payment_tol: float | None = None) -> dict:
    """Compare auction outcomes under truthful and constant profiles with VCG.

    Valid in the non-decreasing regime, where both profiles end with the
    strong bidder on the cap paying the weak bidder's spread and the
    weak bidder taking the residual share for free.
    """
    from .valuation import vcg_outcome

    if env.regime != "non-decreasing":
        raise AssumptionViolation("VCG equivalence holds in the non-decreasing regime")
    tol = payment_tol if payment_tol is not None else 2 * config.eps
    grid = config.grid
    run_cfg = AuctionConfig(grid=grid, eps=config.eps, max_price=config.max_price,
                            start=config.start, refine=config.refine,
                            refine_tol=config.refine_tol,
                            money_scale=config.money_scale, log_rounds=False)
    want = vcg_outcome(env)
    report = {"vcg": want, "profiles": {}, "all_match": True}
    for tag in ("cmra-truthful", "constant"):
        make = STRATEGY_TAGS[tag]
        out = run_cmra(make(env.models[0], grid), make(env.models[1], grid),
                       env, run_cfg)
        alloc_ok = out.quantities is not None and all(
            abs(q - w) < 1e-9 for q, w in zip(out.quantities, want.quantities))
        pay_ok = all(abs(p - w) <= tol for p, w in zip(out.payments, want.payments))
        report["profiles"][tag] = {
            "outcome": out, "allocation_match": alloc_ok, "payment_match": pay_ok}
        report["all_match"] = report["all_match"] and alloc_ok and pay_ok
    return report
