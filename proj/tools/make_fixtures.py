#!/usr/bin/env python3
"""Generate the synthetic fixture sets under data/fixtures/.

Deterministic for a given --seed. Writes four sets:
  flu/        16 weekly range-bin markets, surveillance vintages, hub quantile forecasts
  measles/    threshold markets with surveillance, no hub forecasts
  diagnostic/ one market with hand-authored prices and floors (impossible mass)
  dominance/  markets where the hub ensemble beats the market on every snapshot
"""

import argparse
import csv
import datetime as dt
import json
import pathlib

import numpy as np
from scipy.stats import norm

UTC = dt.timezone.utc
LEVELS = [0.01, 0.025] + [round(0.05 * i, 2) for i in range(1, 20)] + [0.975, 0.99]


def ts(d):
    return int(d.timestamp())


def day(y, m, d, h=0):
    return dt.datetime(y, m, d, h, tzinfo=UTC)


def rfc(d):
    return d.strftime("%Y-%m-%dT%H:%M:%SZ")


def fmt_int(n):
    return f"{int(n):,}"


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def range_labels(edges):
    """Integer-count range labels: "<a", "a-(b-1)", ..., "z+"."""
    labels = [f"<{fmt_int(edges[1])}"]
    for lo, hi in zip(edges[1:-1], edges[2:]):
        labels.append(f"{fmt_int(lo)}-{fmt_int(hi - 1)}")
    labels.append(f"{fmt_int(edges[-1])}+")
    return labels


def bin_probs(mu, sd, edges):
    """Normal belief discretized onto [0, e1), [e1, e2), ..., [ek, inf)."""
    cdf = norm.cdf((np.asarray(edges[1:], dtype=float) - mu) / sd)
    return np.diff(np.concatenate([[0.0], cdf, [1.0]]))


def quote(p, rng, overround):
    q = np.clip(p * overround + rng.normal(0, 0.004, size=len(p)), 0.001, 0.999)
    return np.round(q, 3)


def price_times(open_t, close_t, step_hours):
    out = []
    t = open_t
    while t < close_t:
        out.append(t)
        t += dt.timedelta(hours=step_hours)
    return out


def flu(root, rng):
    out = root / "flu"
    # Weekly Friday publications of cumulative hospitalizations.
    pubs = []
    d = dt.date(2025, 8, 1)
    cumulative = 0.0
    week = 0
    while d <= dt.date(2026, 5, 8):
        peak = 21000.0 * np.exp(-0.5 * ((week - 24) / 5.5) ** 2)
        cumulative += 900.0 + peak + rng.normal(0, 250)
        pubs.append((d, round(cumulative)))
        d += dt.timedelta(days=7)
        week += 1
    by_date = dict(pubs)
    write_csv(out / "surveillance" / "flu_hosp.csv", ["target_key", "published", "value", "source"],
              [["flu_hosp_cumulative_US", p.isoformat(), v, "synthetic-nhsn"] for p, v in pubs])

    markets = []
    hub_rows = []
    models = {"Alpha-Model": (0.06, 0.20), "Beta-Model": (-0.08, 0.28), "Gamma-Model": (0.0, 0.12)}
    for k in range(16):
        resolve = dt.date(2026, 1, 16) + dt.timedelta(days=7 * k)
        ref = resolve - dt.timedelta(days=13)
        base = by_date[resolve - dt.timedelta(days=14)]
        final = by_date[resolve]
        increment = final - base

        # Hub forecasts of the two-week increment at horizons 0, 1, 2; only horizon 1 is matched.
        quantiles = {}
        for model, (bias, spread) in models.items():
            for horizon in (0, 1, 2):
                mu = increment * (1 + bias + rng.normal(0, 0.08)) * (0.7 + 0.3 * horizon)
                sd = max(spread * increment, 300.0)
                vals = np.maximum(mu + sd * norm.ppf(LEVELS), 0.0)
                vals = np.round(vals, 1)
                quantiles[(model, horizon)] = vals
                for lv, v in zip(LEVELS, vals):
                    hub_rows.append([model, ref.isoformat(), "wk inc flu hosp", horizon,
                                     (ref + dt.timedelta(days=7 * horizon)).isoformat(), "US", "quantile", lv, v])
        for horizon in (0, 1, 2):
            ens = np.median(np.stack([quantiles[(m, horizon)] for m in models]), axis=0)
            for lv, v in zip(LEVELS, ens):
                hub_rows.append(["FluSight-ensemble", ref.isoformat(), "wk inc flu hosp", horizon,
                                 (ref + dt.timedelta(days=7 * horizon)).isoformat(), "US", "quantile", lv,
                                 round(float(v), 1)])

        # Range bins of width 5,000 around the expected final value.
        center = int(round((base + increment) / 5000.0)) * 5000
        edges = [0] + [center - 15000 + 5000 * i for i in range(7)]
        labels = range_labels(edges)
        res_t = dt.datetime.combine(resolve, dt.time(0, 0), UTC)
        open_t = res_t - dt.timedelta(days=9)
        times = price_times(open_t, res_t, 6)
        bias = rng.normal(0, 0.12 * increment)
        series = [[] for _ in labels]
        for i, t in enumerate(times):
            frac = i / len(times)
            mu = final + bias * (1 - frac) + rng.normal(0, 0.05 * increment)
            sd = max(0.15 * increment * (1 - 0.6 * frac), 1500.0)
            q = quote(bin_probs(mu, sd, edges), rng, 1.02)
            for c in range(len(labels)):
                if i > 0 and rng.random() < 0.1:
                    continue  # missing tick, filled from the previous one
                series[c].append([ts(t) + int(rng.integers(0, 1800)), float(q[c])])
        contracts = [{"contract_id": f"flu-{k:02d}-c{c}", "label": labels[c], "points": series[c]}
                     for c in range(len(labels))]
        rec = {"market_id": f"flu-cum-{resolve.isoformat()}", "disease": "influenza", "structure": "range_bins",
               "resolution_time": rfc(res_t), "contracts": contracts}
        if k != 5:
            vol, total = [], 0.0
            for t in times[::4]:
                total += float(rng.gamma(2.0, 4000.0))
                vol.append([ts(t), round(total, 2)])
            rec["volume"] = vol
        markets.append(rec)

    write_json(out / "markets.json", markets)
    write_csv(out / "hub" / "forecasts.csv",
              ["model_id", "reference_date", "target", "horizon", "target_end_date", "location", "output_type",
               "output_type_id", "value"], hub_rows)
    write_json(out / "config.json", {
        "disease": "influenza", "fixture": "markets.json", "surveillance_dir": "surveillance",
        "target_key": "flu_hosp_cumulative_US", "hub_forecasts": "hub/forecasts.csv", "hub_location": "US",
        "hub_target": "wk inc flu hosp", "hub_horizon": 1, "ensemble_model": "FluSight-ensemble",
        "fidelity_minutes": 60, "kappa": 1.0, "grid_step": 0.01, "seed": 20260101, "workers": 4,
        "arima": {"enabled": True}})
    write_json(out / "config_no_arima.json", {
        "disease": "influenza", "fixture": "markets.json", "surveillance_dir": "surveillance",
        "target_key": "flu_hosp_cumulative_US", "hub_forecasts": "hub/forecasts.csv", "hub_location": "US",
        "fidelity_minutes": 60, "seed": 20260101, "workers": 2})


def measles(root, rng):
    out = root / "measles"
    pubs = []
    d = dt.date(2026, 1, 7)
    cumulative = 0.0
    week = 0
    while d <= dt.date(2026, 7, 8):
        cumulative += max(0.0, 35 + 4.0 * week + rng.normal(0, 12))
        pubs.append((d, round(cumulative)))
        d += dt.timedelta(days=7)
        week += 1
    write_csv(out / "surveillance" / "measles.csv", ["target_key", "published", "value", "source"],
              [["measles_cases_US_2026", p.isoformat(), v, "synthetic-cdc"] for p, v in pubs])

    def settle(t):
        for p, v in pubs:
            if dt.datetime.combine(p, dt.time(12), UTC) >= t:
                return v
        raise ValueError("unsettled")

    styles = ["{n}+ cases by {month} {day}, 2026",
              "More than {n} measles cases by {month} {day}?",
              "At least {n} US measles cases in 2026 by {month} {day}"]
    markets = []
    for k, (month, mday, mnum) in enumerate([("April", 30, 4), ("May", 31, 5), ("June", 30, 6)]):
        res_t = day(2026, mnum, mday, 23)
        final = settle(res_t)
        step = 100
        lo = int(round(final / step)) * step - 2 * step
        thresholds = [lo + step * i for i in range(5)]
        open_t = res_t - dt.timedelta(days=21)
        times = price_times(open_t, res_t, 8)
        bias = rng.normal(0, 120)
        series = [[] for _ in thresholds]
        for i, t in enumerate(times):
            frac = i / len(times)
            mu = final + bias * (1 - frac)
            sd = 150 * (1 - 0.6 * frac) + 20
            q = 1 - norm.cdf((np.asarray(thresholds, float) - mu) / sd)
            q = np.clip(np.round(q + rng.normal(0, 0.01, size=len(q)), 3), 0.001, 0.999)
            if i % 7 == 3:
                q[2], q[3] = q[3], q[2]  # occasional crossed quotes
            for c in range(len(thresholds)):
                series[c].append([ts(t), float(q[c])])
        contracts = [{"contract_id": f"measles-{k}-t{c}",
                      "label": styles[c % 3].format(n=fmt_int(n), month=month, day=mday),
                      "points": series[c]} for c, n in enumerate(thresholds)]
        vol, total = [], 0.0
        for t in times[::3]:
            total += float(rng.gamma(2.0, 1500.0))
            vol.append([ts(t), round(total, 2)])
        markets.append({"market_id": f"measles-{month.lower()}-2026", "disease": "measles",
                        "structure": "thresholds", "resolution_time": rfc(res_t), "contracts": contracts,
                        "volume": vol})
    write_json(out / "markets.json", markets)
    write_json(out / "config.json", {
        "disease": "measles", "fixture": "markets.json", "surveillance_dir": "surveillance",
        "target_key": "measles_cases_US_2026", "fidelity_minutes": 60, "seed": 20260101, "workers": 2,
        "arima": {"enabled": True, "min_length": 12}})


def diagnostic(root):
    """Hand-authored: prices sum to one, floors chosen so the impossible mass is
    0.20, 0.15, 0.10, 0.05 at the four snapshots."""
    out = root / "diagnostic"
    edges = [0, 1000, 2000, 3000, 4000]
    labels = range_labels(edges)
    prices = [[0.20, 0.30, 0.25, 0.15, 0.10],
              [0.05, 0.10, 0.40, 0.30, 0.15],
              [0.03, 0.07, 0.45, 0.30, 0.15],
              [0.01, 0.01, 0.03, 0.60, 0.35]]
    snap_times = [day(2026, 3, 3), day(2026, 3, 10), day(2026, 3, 17), day(2026, 3, 24)]
    contracts = [{"contract_id": f"diag-c{c}", "label": labels[c],
                  "points": [[ts(t), prices[i][c]] for i, t in enumerate(snap_times)]} for c in range(5)]
    write_json(out / "markets.json", [{"market_id": "diag-cum", "disease": "influenza", "structure": "range_bins",
                                       "resolution_time": rfc(day(2026, 3, 30)), "contracts": contracts}])
    floors = [("2026-02-23", 1000), ("2026-03-02", 1000), ("2026-03-09", 2000), ("2026-03-16", 2500),
              ("2026-03-23", 3000), ("2026-03-30", 3400)]
    write_csv(out / "surveillance" / "diag.csv", ["target_key", "published", "value", "source"],
              [["diag_cumulative", p, v, "hand-authored"] for p, v in floors])
    write_json(out / "config.json", {
        "disease": "influenza", "fixture": "markets.json", "surveillance_dir": "surveillance",
        "target_key": "diag_cumulative", "fidelity_minutes": 60, "workers": 1})


def dominance(root, rng):
    """The ensemble concentrates on the realized bin; the market leans away from it."""
    out = root / "dominance"
    pubs = []
    d = dt.date(2026, 1, 2)
    cumulative = 10000
    while d <= dt.date(2026, 3, 6):
        cumulative += 2000 + int(rng.integers(-200, 200))
        pubs.append((d, cumulative))
        d += dt.timedelta(days=7)
    by_date = dict(pubs)
    write_csv(out / "surveillance" / "dom.csv", ["target_key", "published", "value", "source"],
              [["dom_cumulative", p.isoformat(), v, "synthetic"] for p, v in pubs])
    markets, hub_rows = [], []
    for k in range(4):
        resolve = dt.date(2026, 1, 30) + dt.timedelta(days=7 * k)
        ref = resolve - dt.timedelta(days=13)
        base = by_date[resolve - dt.timedelta(days=14)]
        final = by_date[resolve]
        center = int(final // 1000) * 1000
        edges = [0] + [center - 2000 + 1000 * i for i in range(4)]
        labels = range_labels(edges)
        # Ensemble: increment quantiles tightly inside the realized bin.
        inc_lo, inc_hi = center + 100 - base, center + 900 - base
        vals = np.round(inc_lo + (inc_hi - inc_lo) * np.asarray(LEVELS), 1)
        for lv, v in zip(LEVELS, vals):
            hub_rows.append(["FluSight-ensemble", ref.isoformat(), "wk inc flu hosp", 1,
                             (ref + dt.timedelta(days=7)).isoformat(), "US", "quantile", lv, float(v)])
        res_t = dt.datetime.combine(resolve, dt.time(0), UTC)
        times = price_times(res_t - dt.timedelta(days=3), res_t, 12)
        # Market: mass spread with at most 0.2 on the realized bin (index 3).
        q = [0.25, 0.2, 0.2, 0.2, 0.15]
        contracts = [{"contract_id": f"dom-{k}-c{c}", "label": labels[c],
                      "points": [[ts(t), q[c]] for t in times]} for c in range(len(labels))]
        markets.append({"market_id": f"dom-{resolve.isoformat()}", "disease": "influenza",
                        "structure": "range_bins", "resolution_time": rfc(res_t), "contracts": contracts})
    write_json(out / "markets.json", markets)
    write_csv(out / "hub" / "forecasts.csv",
              ["model_id", "reference_date", "target", "horizon", "target_end_date", "location", "output_type",
               "output_type_id", "value"], hub_rows)
    write_json(out / "config.json", {
        "disease": "influenza", "fixture": "markets.json", "surveillance_dir": "surveillance",
        "target_key": "dom_cumulative", "hub_forecasts": "hub/forecasts.csv", "fidelity_minutes": 60,
        "workers": 1})


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures"))
    ap.add_argument("--seed", type=int, default=20260101)
    args = ap.parse_args()
    root = pathlib.Path(args.out)
    rng = np.random.default_rng(args.seed)
    flu(root, rng)
    measles(root, rng)
    diagnostic(root)
    dominance(root, rng)


if __name__ == "__main__":
    main()
