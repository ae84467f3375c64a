"""Independent derivations of the expected values used by the C++ tests.

Everything here is recomputed from first principles (plain arithmetic on the
default constants), never by calling the C++ code. Run with no arguments to
print the values; with --check FILE to verify a frozen copy; with --write
FILE to refresh it.
"""

import argparse
import json
import math
import sys
from fractions import Fraction

DEFAULTS = {
    "dt_ms": 50.0,
    "max_speed_deg_s": 45.0,
    "range_deg": 300.0,
    "center_deg": 150.0,
    "wall_halfwidth_deg": 28.125,
    "max_flex_deg": 23.4,
    "spring_load_per_deg": 51.2,
    "impact_load_per_deg_s": 12.0,
    "free_noise_mean": 30.0,
    "num_bins": 32,
    "alpha": 0.1,
    "gamma": 0.92,
}


def walls(center, halfwidth):
    return center - halfwidth, center + halfwidth


def bin_of(angle, range_deg=300.0, bins=32):
    width = Fraction(range_deg) / bins
    b = math.floor(Fraction(angle) / width)
    return min(b, bins - 1)


def encode(angle, velocity, eps=0.1):
    direction = 0 if abs(velocity) <= eps else (1 if velocity < 0 else 2)
    return [bin_of(angle) * 3 + direction, DEFAULTS["num_bins"] * 3]


def push_right_noiseless():
    """Full push from center into the right wall with zero noise.

    Free motion at 45 deg/s; inside the wall half rate; impact transient on
    the first contact tick; spring load per degree of penetration.
    """
    d = DEFAULTS
    _, right = walls(d["center_deg"], d["wall_halfwidth_deg"])
    step = Fraction(d["max_speed_deg_s"]) * Fraction(d["dt_ms"]) / 1000
    angle = Fraction(d["center_deg"])
    right = Fraction(right)
    flex = Fraction(d["max_flex_deg"])
    rows = []
    in_contact = False
    for t in range(1, 60):
        if angle >= right:
            angle = min(angle + step / 2, right + flex)
        elif angle + step <= right:
            angle = angle + step
        else:
            leftover = step - (right - angle)
            angle = min(right + leftover / 2, right + flex)
        pen = max(angle - right, 0)
        raw = Fraction(d["free_noise_mean"])
        contact = pen > 0
        if contact:
            raw += Fraction(d["spring_load_per_deg"]) * pen
            if not in_contact:
                raw += Fraction(d["impact_load_per_deg_s"]) * Fraction(d["max_speed_deg_s"])
        in_contact = contact
        load = int(min(max(raw, 0), 1024) + Fraction(1, 2))
        rows.append({"t": t, "angle": float(angle), "penetration": float(pen), "load": load})
    first_contact = next(r for r in rows if r["penetration"] > 0)
    at_flex = next(r for r in rows if r["penetration"] >= 12.7)
    saturated = next(r for r in rows if r["penetration"] >= d["max_flex_deg"])
    return {
        "angle_after_one_tick": rows[0]["angle"],
        "first_contact_tick": first_contact["t"],
        "first_contact_load": first_contact["load"],
        "flex_12_7_tick": at_flex["t"],
        "flex_12_7_load": at_flex["load"],
        "saturation_tick": saturated["t"],
        "saturation_load": saturated["load"],
        "loads": [r["load"] for r in rows[:40]],
    }


def self_loop_prediction(c, updates, alpha, gamma, active_units=2):
    """Prediction after n TD(0) updates on a self-looping state.

    With k active units initialised to 0, each update moves the prediction
    by k*alpha*delta, delta = c + (gamma - 1) p, so
    p_n = L (1 - (1 - k alpha (1 - gamma))^n) with L = c / (1 - gamma).
    """
    limit = c / (1 - gamma)
    rate = 1 - active_units * alpha * (1 - gamma)
    return limit * (1 - rate**updates)


def geometric_return(c, gamma, terms=5000):
    return sum(c * gamma**k for k in range(terms))


def derive():
    d = DEFAULTS
    left, right = walls(d["center_deg"], d["wall_halfwidth_deg"])
    alpha, gamma = d["alpha"], d["gamma"]
    return {
        "sim": {
            "walls_default": [left, right],
            "walls_halfwidth_9_375": list(walls(150.0, 9.375)),
            **push_right_noiseless(),
        },
        "codec": {
            "encode_0_0": encode(0.0, 0.0),
            "encode_150_p20": encode(150.0, 20.0),
            "encode_300_m5": encode(300.0, -5.0),
            "bin_121_875": bin_of(121.875),
            "bin_0": bin_of(0.0),
            "bin_178_2": bin_of(178.2),
            "interior_bins": [b for b in range(32) if b * 9.375 >= left and (b + 1) * 9.375 <= right],
        },
        "learner": {
            "single_update_weight": alpha * 100.0,
            "single_update_delta": 100.0,
            "fixed_point_limit": 80.0 / (1 - gamma),
            "fixed_point_geometric_sum": geometric_return(80.0, gamma),
            "fixed_point_after_500": self_loop_prediction(80.0, 500, alpha, gamma),
            "horizon_pulse_30_bound": 1024 * gamma**30,
        },
        "metrics": {
            "lead_onset_90_contact_100_ms": (100 - 90) * d["dt_ms"],
        },
        "user": {
            "latency_ticks_200ms": round(200.0 / d["dt_ms"]),
            "reversal_tick_onset_100": 100 + round(200.0 / d["dt_ms"]),
        },
    }


def close(a, b):
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(close(a[k], b[k]) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(close(x, y) for x, y in zip(a, b))
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)
    return a == b


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--check")
    parser.add_argument("--write")
    args = parser.parse_args()
    values = derive()
    if args.write:
        with open(args.write, "w") as f:
            json.dump(values, f, indent=2)
            f.write("\n")
    elif args.check:
        with open(args.check) as f:
            frozen = json.load(f)
        if not close(values, frozen):
            print("frozen oracle values are stale; rerun with --write", file=sys.stderr)
            return 1
        print("frozen oracle values match")
    else:
        print(json.dumps(values, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
