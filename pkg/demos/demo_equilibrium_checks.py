"""Desk-scale equilibrium verdicts for every strategy and regime.

Builds the strategy-by-regime classification table with reduced grids
(minutes of work squeezed to seconds), then zooms into one refutation:
the best deviation the search finds against truthful bidding when
marginal values decrease, replayed through the engine.
"""

from cmra import (AuctionConfig, MarketEnv, QuantityGrid, TypeDistribution,
                  ValuationModel, check_expost, format_matrix,
                  replay_deviation, strategy_matrix)
from cmra.equilibrium import DeviationFamily

print("strategy-by-regime classification (desk scale):\n")
print(format_matrix(strategy_matrix(theta_grid=3, eps=1e-2)))

print("\nzoom: why truthful additional bids fail with decreasing marginals")
support = (1.05, 1.25)
models = tuple(ValuationModel.quadratic(t, 0.5, 0.9, support)
               for t in (1.25, 1.25))
env = MarketEnv(models, 0.9, TypeDistribution("uniform", support))
config = AuctionConfig(grid=QuantityGrid(20, 0.9), eps=5e-3, max_price=1.5,
                       log_rounds=False)
result = check_expost("cmra-truthful", env, config, theta_grid=3,
                      family=DeviationFamily(n_amounts=25, n_submit_prices=10,
                                             n_drop_prices=10),
                      tol=1e-4, stop_at_gain=1e-3)
report = next(r for r in result.reports.values()
              if r.best_deviation is not None and r.best_gain == result.max_gain)
dev = report.best_deviation
print(f"  deviator type {report.deviator_theta:.3f} vs opponent "
      f"{report.best_opponent:.3f} (seat {report.seat + 1})")
print(f"  deviation: {dev}")
print(f"  baseline surplus {report.baseline[report.best_opponent]:.5f} -> "
      f"deviating surplus {report.best_surplus:.5f} "
      f"(gain {report.best_gain:.5f})")

out, surplus = replay_deviation("cmra-truthful", env, report.seat, dev,
                                config,
                                (report.deviator_theta, report.best_opponent))
print(f"  engine replay: closes at {out.final_price:.4f}, allocation "
      f"{out.quantities}, payments {tuple(round(p, 5) for p in out.payments)}")
print("  shading the bid book pays: the deviator either wins more or pays "
      "less than the truthful book would have.")
