"""Scenario ingestion, batch execution and artifact export.

A scenario is a JSON document naming an environment (valuation family,
types, cap), a strategy per bidder, the auction configuration, and a
run mode:

* ``single``: one auction run; writes a round log CSV and an outcome JSON.
* ``sweep``: the same profile across a type grid; writes a summary CSV.
* ``verify``: a named verification claim; writes its report JSON.
* ``audit``: a linear-price audit of a published-outcome record.

Artifacts are deterministic byte for byte for a fixed scenario and
seed.  Bundled example scenarios and the published Danish auction
records ship with the package under ``cmra/data``.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .audit import AuctionAuditRecord, audit_linear_prices
from .bidbook import BidBook, MICRO, QuantityGrid
from .mechanism import AuctionConfig, revenue_curve, run_clock, run_cmra
from .strategies import STRATEGY_TAGS
from .valuation import MarketEnv, TypeDistribution, ValuationModel
from .verify import run_claim

__all__ = [
    "ScenarioError",
    "Scenario",
    "run_scenario",
    "export_figure_data",
    "bundled_scenario_path",
    "bundled_audit_record",
    "write_round_log",
]


class ScenarioError(ValueError):
    """The scenario file is malformed or inconsistent."""


@dataclass
class Scenario:
    """Validated scenario: environment, strategies, config and mode."""

    name: str
    mode: str
    env: MarketEnv
    strategies: tuple
    config: AuctionConfig
    auction: str = "cmra"
    options: dict = field(default_factory=dict)
    seed: int = 0
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        try:
            return cls._parse(data)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"invalid scenario: {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def _parse(cls, data: dict) -> "Scenario":
        name = data.get("name", "scenario")
        mode = data.get("mode", "single")
        if mode not in ("single", "sweep", "verify", "audit"):
            raise ScenarioError(f"unknown mode {mode!r}")
        options = dict(data.get(mode, {}))
        if mode in ("verify", "audit"):
            env = strategies = config = None
            if mode == "verify" and "claim" not in options:
                raise ScenarioError("verify mode needs a claim name")
            if mode == "audit" and "record" not in options:
                raise ScenarioError("audit mode needs a record name or path")
            return cls(name, mode, env, strategies, config,
                       options=options, seed=int(data.get("seed", 0)), raw=data)

        env = _parse_env(data["environment"])
        tags = data.get("strategies", [])
        if len(tags) != 2:
            raise ScenarioError("exactly two bidder strategies are required")
        for tag in tags:
            if tag not in STRATEGY_TAGS:
                raise ScenarioError(f"unknown strategy tag {tag!r}")
        config = _parse_config(data.get("config", {}), env.cap)
        strategies = tuple(STRATEGY_TAGS[t](m, config.grid)
                           for t, m in zip(tags, env.models))
        auction = data.get("auction", "cmra")
        if auction not in ("cmra", "clock"):
            raise ScenarioError(f"unknown auction kind {auction!r}")
        return cls(name, mode, env, strategies, config, auction,
                   options, int(data.get("seed", 0)), data)

    def to_dict(self) -> dict:
        return dict(self.raw)


def _parse_env(spec: dict) -> MarketEnv:
    cap = float(spec["cap"])
    family = spec["family"]
    thetas = spec.get("thetas", [1.0, 1.0])
    support = tuple(spec.get("theta_support", (min(thetas), max(thetas))))
    models = []
    for theta in thetas:
        if family == "power":
            m = ValuationModel.power(float(spec["alpha"]), cap, float(theta),
                                     support)
        elif family == "quadratic":
            m = ValuationModel.quadratic(float(theta),
                                         float(spec.get("curvature", 0.5)),
                                         cap, support)
        elif family == "polynomial":
            m = ValuationModel.polynomial(tuple(spec["coeffs"]), float(theta),
                                          cap, spec.get("regime"), support)
        else:
            raise ScenarioError(f"unknown valuation family {family!r}")
        models.append(m)
    dist_spec = spec.get("distribution", {})
    dist = TypeDistribution(dist_spec.get("kind", "uniform"),
                            tuple(dist_spec.get("support", support)),
                            tuple(dist_spec.get("points", ())))
    return MarketEnv(tuple(models), cap, dist)


def _parse_config(spec: dict, cap: float) -> AuctionConfig:
    grid = QuantityGrid(int(spec.get("grid_n", 20)), cap)
    return AuctionConfig(
        grid=grid,
        eps=float(spec.get("eps", 1e-3)),
        max_price=float(spec.get("max_price", 10.0)),
        start=float(spec.get("start", 0.0)),
        refine=bool(spec.get("refine", True)),
        refine_tol=float(spec.get("refine_tol", 1e-7)),
        money_scale=int(spec.get("money_scale", MICRO)),
        log_rounds=bool(spec.get("log_rounds", True)),
    )


# -- artifact writers ---------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_round_log(path, rounds, grid: QuantityGrid) -> None:
    """Round log CSV: one row per submission plus the round's closing state."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["round", "clock_price", "bidder", "kind", "quantity",
                    "amount", "closed_flag", "r_star"])
        for rec in rounds:
            rnd, price, bidder, kind, k, amount, closed, r_star = rec
            w.writerow([rnd, _fmt(price), bidder, kind, _fmt(grid.share(k)),
                        _fmt(amount), int(bool(closed)), _fmt(r_star)])


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def run_scenario(source, outdir=None, seed=None) -> dict:
    """Execute a scenario file (path, dict or Scenario); write artifacts.

    Returns {"ok": bool, "scenario": name, "outputs": {label: path},
    "result": mode-specific object}.  Raises ScenarioError on invalid
    input; engine errors propagate.
    """
    if isinstance(source, Scenario):
        scenario = source
    elif isinstance(source, dict):
        scenario = Scenario.from_dict(source)
    else:
        scenario = Scenario.from_json(source)
    if seed is not None:
        scenario.seed = seed
    outdir = Path(outdir or os.environ.get("CMRA_OUTPUT_DIR", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = {}

    if scenario.mode == "single":
        runner = run_cmra if scenario.auction == "cmra" else run_clock
        out = runner(scenario.strategies[0], scenario.strategies[1],
                     scenario.env, scenario.config)
        log_path = outdir / f"{scenario.name}_rounds.csv"
        write_round_log(log_path, out.rounds, scenario.config.grid)
        outputs["rounds"] = str(log_path)
        out_path = outdir / f"{scenario.name}_outcome.json"
        _write_json(out_path, out.to_json_dict())
        outputs["outcome"] = str(out_path)
        return {"ok": True, "scenario": scenario.name, "outputs": outputs,
                "result": out}

    if scenario.mode == "sweep":
        rows = _run_sweep(scenario)
        path = outdir / f"{scenario.name}_summary.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta1", "theta2", "final_price", "x1", "x2",
                        "pay1", "pay2", "revenue", "termination"])
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        outputs["summary"] = str(path)
        return {"ok": True, "scenario": scenario.name, "outputs": outputs,
                "result": rows}

    if scenario.mode == "verify":
        options = {k: v for k, v in scenario.options.items() if k != "claim"}
        result = run_claim(scenario.options["claim"], **options)
        path = outdir / f"{scenario.name}_report.json"
        _write_json(path, {"claim": result.claim, "passed": result.passed,
                           "lines": result.lines,
                           "elapsed_s": round(result.elapsed, 3)})
        outputs["report"] = str(path)
        return {"ok": result.passed, "scenario": scenario.name,
                "outputs": outputs, "result": result}

    record = scenario.options["record"]
    if isinstance(record, str) and not os.path.exists(record):
        rec = bundled_audit_record(record)
    else:
        rec = AuctionAuditRecord.from_json(record)
    result = audit_linear_prices(rec)
    path = outdir / f"{scenario.name}_audit.json"
    _write_json(path, result.to_json_dict())
    outputs["audit"] = str(path)
    return {"ok": True, "scenario": scenario.name, "outputs": outputs,
            "result": result}


def _run_sweep(scenario: Scenario):
    spec = scenario.options
    n = int(spec.get("theta_grid", 5))
    lo, hi = scenario.env.distribution.support
    thetas = [lo + (hi - lo) * i / (n - 1) for i in range(n)] if n > 1 \
        else [0.5 * (lo + hi)]
    runner = run_cmra if scenario.auction == "cmra" else run_clock
    tags = [type(s).tag for s in scenario.strategies]
    rows = []
    cfg = scenario.config
    quiet = AuctionConfig(grid=cfg.grid, eps=cfg.eps, max_price=cfg.max_price,
                          start=cfg.start, refine=cfg.refine,
                          refine_tol=cfg.refine_tol,
                          money_scale=cfg.money_scale, log_rounds=False)
    for t1 in thetas:
        for t2 in thetas:
            models = (scenario.env.models[0].with_theta(t1),
                      scenario.env.models[1].with_theta(t2))
            env = MarketEnv(models, scenario.env.cap,
                            scenario.env.distribution)
            strat = tuple(STRATEGY_TAGS[tag](m, cfg.grid)
                          for tag, m in zip(tags, models))
            out = runner(strat[0], strat[1], env, quiet)
            q = out.quantities or (None, None)
            rows.append((t1, t2, out.final_price, q[0], q[1],
                         out.payments[0], out.payments[1], out.revenue,
                         out.termination))
    return rows


def export_figure_data(source, prices, outdir=None) -> dict:
    """Bid functions and revenue curves at chosen clock prices, as CSV.

    The scenario must be a single CMRA run; every requested price must
    lie between the start price and the final closing price.  Books are
    replayed up to each price exactly as the engine would build them.
    """
    scenario = source if isinstance(source, Scenario) else (
        Scenario.from_dict(source) if isinstance(source, dict)
        else Scenario.from_json(source))
    if scenario.mode != "single" or scenario.auction != "cmra":
        raise ScenarioError("figure export needs a single-run CMRA scenario")
    outdir = Path(outdir or os.environ.get("CMRA_OUTPUT_DIR", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = scenario.config
    final = run_cmra(scenario.strategies[0], scenario.strategies[1],
                     scenario.env, cfg)
    for p in prices:
        if not cfg.start <= p <= final.final_price + 1e-12:
            raise ScenarioError(
                f"price {p} outside [{cfg.start}, {final.final_price}]")

    bid_path = outdir / f"{scenario.name}_bid_functions.csv"
    rev_path = outdir / f"{scenario.name}_revenue_curves.csv"
    with open(bid_path, "w", newline="") as fb, \
            open(rev_path, "w", newline="") as fr:
        wb = csv.writer(fb)
        wr = csv.writer(fr)
        wb.writerow(["clock_price", "bidder", "quantity", "bid"])
        wr.writerow(["clock_price", "x1", "both_bidders_revenue",
                     "single_acceptance_revenue"])
        for p in prices:
            books = _books_at_price(scenario, p)
            scale = cfg.money_scale
            for i, book in enumerate(books, start=1):
                for k in range(cfg.grid.n + 1):
                    v = book.bid_at_index(k)
                    if v is not None:
                        wb.writerow([_fmt(float(p)), i,
                                     _fmt(cfg.grid.share(k)), _fmt(v / scale)])
            for x1, pair, single in revenue_curve(books[0], books[1], p):
                wr.writerow([_fmt(float(p)), _fmt(x1),
                             _fmt(None if pair is None else pair / scale),
                             _fmt(None if single is None else single / scale)])
    return {"ok": True, "scenario": scenario.name,
            "outputs": {"bid_functions": str(bid_path),
                        "revenue_curves": str(rev_path)},
            "result": final}


def _books_at_price(scenario: Scenario, price: float):
    """Book state at a clock price: all ladder rounds below, then the price."""
    cfg = scenario.config
    books = tuple(BidBook(cfg.grid, cfg.money_scale) for _ in range(2))
    t = 0
    while True:
        p = cfg.start + t * cfg.eps
        if p >= price - 1e-15:
            break
        for book, strat in zip(books, scenario.strategies):
            book.record_round_indexed(p, strat.headline_index(p),
                                      *strat.additional_bid_arrays(p),
                                      clamp=True)
        t += 1
    for book, strat in zip(books, scenario.strategies):
        book.record_round_indexed(price, strat.headline_index(price),
                                  *strat.additional_bid_arrays(price),
                                  clamp=True)
    return books


# -- bundled data --------------------------------------------------------

def bundled_scenario_path(name: str) -> Path:
    """Filesystem path of a bundled scenario (without the .json suffix)."""
    ref = resources.files("cmra.data") / f"{name}.json"
    if not ref.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return Path(str(ref))


def bundled_audit_record(name: str) -> AuctionAuditRecord:
    ref = resources.files("cmra.data") / f"{name}.json"
    if not ref.is_file():
        raise ScenarioError(f"no bundled audit record named {name!r}")
    with ref.open() as fh:
        return AuctionAuditRecord.from_dict(json.load(fh))
