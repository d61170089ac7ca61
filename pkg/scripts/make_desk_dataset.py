"""Generate the bundled desk-scale bank-quarter snapshot (Group II indicators).

Writes src/bankcf/data/desk_bank_quarters.csv: ~2,000 bank-quarters spanning
2008-2023 with roughly 5% failure-window rows. Healthy banks draw indicators
around per-bank baselines; a minority of them go through a temporary stress
episode and recover, which puts negative-labeled rows inside the distress
region. Failing banks ramp toward distress over their last six quarters, and
post-2014 failures carry a milder signature than the crisis-era ones, so
models trained pre-2014 face genuine temporal drift.

Deterministic: fixed seed, values rounded to fixed decimals before writing.
"""

from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

import numpy as np

SEED = 42
OUT = Path(__file__).resolve().parents[1] / "src" / "bankcf" / "data" / "desk_bank_quarters.csv"

QUARTER_ENDS = [
    dt.date(year, month, day)
    for year in range(2008, 2024)
    for month, day in ((3, 31), (6, 30), (9, 30), (12, 31))
]

# (mean, per-bank sd, per-quarter sd), clipping to the indicator validity range
HEALTHY = {
    "TICRC": (0.105, 0.018, 0.007, (-0.01, 0.19)),
    "NIMY": (3.6, 0.45, 0.22, (-4.0, 26.0)),
    "INTEXPYQ": (1.35, 0.30, 0.12, (-0.5, 5.5)),
    "RBCIAAJ": (10.5, 1.30, 0.45, (-20.0, 200.0)),
    "ROE": (9.0, 2.50, 2.60, (-12000.0, 1000.0)),
}

# distress drift per unit severity; severity ramps 0 -> 1 over the last 6 quarters
DRIFT = {
    "TICRC": -0.062,
    "NIMY": -1.15,
    "INTEXPYQ": 1.35,
    "RBCIAAJ": -5.2,
    "ROE": -42.0,
}

DECIMALS = {"TICRC": 4, "NIMY": 2, "INTEXPYQ": 2, "RBCIAAJ": 2, "ROE": 1}

N_HEALTHY = 96
N_STRESSED = 0  # survive a temporary dip into the distress region
N_FAIL_EARLY = 19  # crisis-era failures, before 2014
N_FAIL_LATE = 13  # post-2014 failures, milder signature
LATE_SEVERITY = 0.55
RAMP_QUARTERS = 6


def quarter_index(date: dt.date) -> int:
    return QUARTER_ENDS.index(date)


def era_noise_scale(date: dt.date) -> float:
    """Crisis-era reporting was choppier across the board."""
    return 1.15 if date.year <= 2011 else 1.0


def healthy_value(rng, bank_mean, name, date, era_shift=0.0):
    _, _, q_sd, (lo, hi) = HEALTHY[name]
    sd = q_sd * era_noise_scale(date)
    return float(np.clip(bank_mean[name] + rng.normal(0.0, sd) + era_shift, lo, hi))


def bank_baseline(rng):
    return {
        name: rng.normal(mean, bank_sd) for name, (mean, bank_sd, _, _) in HEALTHY.items()
    }


def era_funding_shift(date: dt.date) -> float:
    """Funding costs ran high in 2008-2009, eased, then rose again in 2022-2023."""
    if date.year <= 2009:
        return 0.45
    if date.year >= 2022:
        return 0.55
    return 0.0


def apply_distress(rng, values, severity, intensity):
    wobble = rng.uniform(0.8, 1.2)
    for name, drift in DRIFT.items():
        lo, hi = HEALTHY[name][3]
        values[name] = float(
            np.clip(values[name] + drift * severity * intensity * wobble, lo, hi)
        )
    # ROE collapses disproportionately under stress
    values["ROE"] = float(
        np.clip(values["ROE"] - rng.uniform(0, 25) * severity * intensity, *HEALTHY["ROE"][3])
    )
    return values


def emit_bank(rng, bank_id, start_q, end_q, failure_date=None, severity_scale=1.0,
              stress_window=None):
    rows = []
    baseline = bank_baseline(rng)
    intensity = rng.uniform(0.75, 1.25) * severity_scale
    for qi in range(start_q, end_q + 1):
        date = QUARTER_ENDS[qi]
        if failure_date is not None and date > failure_date:
            break
        values = {
            name: healthy_value(
                rng, baseline, name, date,
                era_funding_shift(date) if name == "INTEXPYQ" else 0.0,
            )
            for name in HEALTHY
        }
        if failure_date is not None:
            quarters_left = quarter_index(failure_date) - qi
            severity = max(0.0, (RAMP_QUARTERS - quarters_left) / RAMP_QUARTERS)
            if severity > 0:
                values = apply_distress(rng, values, severity, intensity)
        elif stress_window is not None and stress_window[0] <= qi <= stress_window[1]:
            # recovered stress episode: distress-looking quarters, label stays 0
            values = apply_distress(rng, values, rng.uniform(0.25, 0.55), intensity)
        label = 0
        if failure_date is not None:
            window_start = failure_date - dt.timedelta(days=365)
            label = int(window_start < date <= failure_date)
        rows.append(
            {
                "bank_id": bank_id,
                "report_date": date.isoformat(),
                "failed_label": label,
                "failure_date": failure_date.isoformat() if failure_date else "",
                **{name: round(values[name], DECIMALS[name]) for name in HEALTHY},
            }
        )
    return rows


def main() -> None:
    rng = np.random.default_rng(SEED)
    rows = []

    for i in range(N_HEALTHY):
        start = int(rng.integers(0, len(QUARTER_ENDS) - 8))
        length = int(rng.integers(8, 28))
        end = min(start + length, len(QUARTER_ENDS) - 1)
        rows.extend(emit_bank(rng, f"H{i:03d}", start, end))

    crisis_last_q = quarter_index(dt.date(2013, 12, 31))
    for i in range(N_STRESSED):
        # crisis-era episodes only; they blur the training class boundary
        # without polluting the out-of-time years with distressed negatives
        start = int(rng.integers(0, 10))
        length = int(rng.integers(12, 24))
        end = min(start + length, len(QUARTER_ENDS) - 1)
        stress_start = int(rng.integers(start + 2, crisis_last_q - 6))
        stress_len = int(rng.integers(3, 7))
        rows.extend(
            emit_bank(rng, f"S{i:03d}", start, end,
                      stress_window=(stress_start, min(stress_start + stress_len, crisis_last_q)))
        )

    for i in range(N_FAIL_EARLY):
        fail_qi = int(rng.integers(quarter_index(dt.date(2009, 6, 30)),
                                   quarter_index(dt.date(2013, 9, 30)) + 1))
        history = int(rng.integers(8, 18))
        start = max(0, fail_qi - history)
        rows.extend(
            emit_bank(rng, f"F{i:03d}", start, fail_qi, failure_date=QUARTER_ENDS[fail_qi])
        )

    for i in range(N_FAIL_LATE):
        fail_qi = int(rng.integers(quarter_index(dt.date(2015, 3, 31)),
                                   quarter_index(dt.date(2023, 6, 30)) + 1))
        history = int(rng.integers(8, 18))
        start = max(0, fail_qi - history)
        rows.extend(
            emit_bank(
                rng, f"L{i:03d}", start, fail_qi,
                failure_date=QUARTER_ENDS[fail_qi], severity_scale=LATE_SEVERITY,
            )
        )

    rows.sort(key=lambda r: (r["bank_id"], r["report_date"]))
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["bank_id", "report_date", "failed_label", "failure_date",
                        "TICRC", "NIMY", "INTEXPYQ", "RBCIAAJ", "ROE"],
        )
        writer.writeheader()
        writer.writerows(rows)

    n = len(rows)
    positives = sum(r["failed_label"] for r in rows)
    pre = sum(1 for r in rows if r["report_date"] < "2014-01-01")
    pre_pos = sum(r["failed_label"] for r in rows if r["report_date"] < "2014-01-01")
    print(f"wrote {OUT}")
    print(f"rows={n} positives={positives} ({positives / n:.1%})")
    print(f"pre-2014 rows={pre} positives={pre_pos}; post rows={n - pre} positives={positives - pre_pos}")


if __name__ == "__main__":
    main()
