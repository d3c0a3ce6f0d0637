"""Export bid-function and revenue-curve layers for plotting.

Replays the truthful profile on a decreasing-marginals market and dumps,
at four clock prices, each bidder's cumulative bid function and the
revenue of every split allocation next to the best single acceptance.
The CSVs are plot-ready (quantity on x, money on y, one layer per
price).
"""

import csv
from collections import defaultdict

from cmra import export_figure_data

scenario = {
    "name": "dec-bid-functions",
    "mode": "single",
    "auction": "cmra",
    "environment": {
        "cap": 0.9,
        "family": "quadratic",
        "curvature": 0.5,
        "thetas": [1.25, 1.05],
    },
    "strategies": ["cmra-truthful", "cmra-truthful"],
    "config": {"grid_n": 100, "eps": 0.001, "max_price": 1.4,
               "money_scale": 1000000000},
}

prices = [0.13, 0.2254, 0.32, 0.4335]
result = export_figure_data(scenario, prices, outdir="out")
print("wrote:", *result["outputs"].values(), sep="\n  ")
print(f"auction closes at {result['result'].final_price:.6f} "
      f"with allocation {result['result'].quantities}")

# Peek at the revenue curves: where does the best split overtake the
# best single acceptance?
pairs = defaultdict(list)
singles = defaultdict(list)
with open(result["outputs"]["revenue_curves"]) as fh:
    for row in csv.DictReader(fh):
        p = row["clock_price"]
        if row["both_bidders_revenue"]:
            pairs[p].append((float(row["x1"]),
                             float(row["both_bidders_revenue"])))
        if row["single_acceptance_revenue"]:
            singles[p].append(float(row["single_acceptance_revenue"]))

for p in sorted(singles, key=float):
    single = max(singles[p])
    if not pairs[p]:
        print(f"clock {float(p):.4f}: no feasible split bid on by both "
              f"bidders yet; best single {single:.4f} -> still open")
        continue
    x, pair = max(pairs[p], key=lambda r: r[1])
    state = "closes" if pair >= single else "still open"
    print(f"clock {float(p):.4f}: best split at x1={x:.2f} raises {pair:.4f} "
          f"vs single {single:.4f} -> {state}")
