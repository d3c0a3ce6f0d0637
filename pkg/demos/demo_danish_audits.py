"""Reverse-engineer the published Danish CMRA outcomes.

Regulators publish only lot counts and total payments.  If every winner
paid uniform per-lot prices, those totals solve an exact linear system;
solving it (in exact rational arithmetic) tells us whether headline
demands alone can explain an auction or whether pay-as-bid additional
bids must have been winning.
"""

from cmra import audit_linear_prices, bundled_audit_record

for name in ("denmark-2016", "denmark-2019", "denmark-2021"):
    record = bundled_audit_record(name)
    result = audit_linear_prices(record)
    print(f"== {name}: {result.status}")
    if result.status == "feasible":
        for cat, price in sorted(result.prices.items()):
            shown = f"{int(price):,}" if price.denominator == 1 else str(price)
            print(f"   uniform price for {cat}: DKK {shown}")
        print("   every payment is reproduced exactly: consistent with "
              "headline demands winning (clock-like play).")
    elif result.status == "infeasible":
        cert = result.certificate
        print(f"   conflicting bidders: {cert['bidders']}")
        for flag in result.flags:
            if flag["kind"] == "implied-price-conflict":
                rates = ", ".join(f"{b}: DKK {v}" for b, v in
                                  flag["implied_per_lot"].items())
                print(f"   implied per-lot rates disagree on "
                      f"{flag['category']}: {rates}")
        for ident in result.difference_identities:
            terms = " + ".join(f"{v} p[{c}]"
                               for c, v in ident["coefficients"].items())
            print(f"   any linear story still has to satisfy "
                  f"{terms} = {ident['difference']:,} "
                  f"({' - '.join(ident['bidders'])})")
        print("   someone won with a pay-as-bid additional bid.")
    else:
        print(f"   {len(result.record.bidders)} payment equations over "
              f"{len(result.free_categories) + len(result.prices)} unknown "
              f"prices leave a solution family; free categories: "
              f"{', '.join(result.free_categories)}")
        print("   representative at reserves respects the floors:",
              result.representative_ok)
        print("   too many bands for a verdict either way.")
    print()
