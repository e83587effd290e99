#!/usr/bin/env python3
"""Smoke test for the apple_tasting_py extension module.

Build the extension first:

    cargo build --release -p apple-tasting-py

then run this script from the repository root:

    python3 python/smoke_test.py
"""

import json
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libapple_tasting_py.so",
        ROOT / "target" / "debug" / "libapple_tasting_py.so",
        ROOT / "target" / "release" / "libapple_tasting_py.dylib",
        ROOT / "target" / "debug" / "libapple_tasting_py.dylib",
    ]
    src = next((c for c in candidates if c.exists()), None)
    if src is None:
        sys.exit("extension not built; run: cargo build --release -p apple-tasting-py")
    stage = pathlib.Path(tempfile.mkdtemp(prefix="apple_tasting_py_"))
    shutil.copy(src, stage / "apple_tasting_py.so")
    sys.path.insert(0, str(stage))
    import apple_tasting_py

    return apple_tasting_py


def main():
    at = load_module()

    # Game mathematics.
    assert at.sigmoid(0.0) == 0.5
    assert abs(at.sigmoid(3.7) + at.sigmoid(-3.7) - 1.0) < 1e-15
    assert abs(at.expected_loss(0, 0.5, 0.4, 0.05) - 0.2) < 1e-15
    assert abs(at.expected_loss(1, 0.0, 0.4, 0.05) - 1.0) < 1e-15
    assert abs(at.expected_loss(1, 1.0, 0.4, 0.05) - 0.05) < 1e-15
    assert at.realized_loss(1, 0, 0.4, 0.05) == 1.0
    assert at.feedback_signal(0, 1, 0.4, 0.05) is None
    assert at.feedback_signal(1, 1, 0.4, 0.05) == 0.05
    # sigmoid(2.0) = 0.88 is above the indifference probability 1/1.35.
    assert at.optimal_action([2.0], [1.0], 0.4, 0.05) == 1
    assert at.optimal_action([0.0], [1.0], 0.4, 0.05) == 0

    # IDS probabilities.
    assert abs(at.ids_prob_traditional(0.1, 0.5) - 0.25) < 1e-12
    assert at.ids_prob_traditional(0.1, 0.2) == 1.0
    assert abs(at.ids_prob_tunable(0.05, 0.15, 0.5, 0.05) - 0.75) < 1e-12

    # Polya-Gamma sampler: determinism, positivity, first moment.
    pg1, pg2 = at.PolyaGamma(7), at.PolyaGamma(7)
    assert pg1.draw_many(1.3, 16) == pg2.draw_many(1.3, 16)
    draws = at.PolyaGamma(11).draw_many(0.0, 20000)
    assert all(v > 0.0 for v in draws)
    mean = sum(draws) / len(draws)
    assert abs(mean - 0.25) < 0.01, mean
    assert abs(at.PolyaGamma.series_mean(0.0, 10000) - 0.25) < 1e-4

    # Gibbs over an empty dataset samples the prior.
    prior_draws = at.gibbs([0.7], 1.0, 4000, [], [], [0.0], 3)
    m = sum(t[0] for t in prior_draws) / len(prior_draws)
    assert abs(m - 0.7) < 0.1, m

    # Penalized MLE: single observation (x=1, c=1), ridge 1 solves
    # sigmoid(theta) = 1 - theta at theta ~= 0.40106.
    theta, converged = at.fit_penalized_mle([[1.0]], [1], 1.0, 1)
    assert converged
    assert abs(theta[0] - 0.40106) < 1e-4, theta

    # Projection: Euclidean case.
    proj = at.project_to_ellipsoid([2.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], 1.0)
    assert abs(proj[0] - 1.0) < 1e-9 and abs(proj[1]) < 1e-9

    # End-to-end experiment with byte-identical determinism.
    config = {
        "problem": {
            "custom": {
                "d": 2,
                "horizon": 60,
                "l01": 0.4,
                "l11": 0.05,
                "theta": {"uniform": {"low": -1.0, "high": 1.0}},
                "context": {"iid_gaussian": {}},
            }
        },
        "policies": [
            {"name": "pg-ts", "kind": {"pg_ts": {"m": 5}}},
            {"name": "eps", "kind": {"epsilon_greedy": {"epsilon": 0.1}}},
        ],
        "reps": 3,
        "seed": 123,
    }
    with tempfile.TemporaryDirectory() as tmp:
        out_a = pathlib.Path(tmp) / "a"
        out_b = pathlib.Path(tmp) / "b"
        summary = json.loads(at.run_experiment(json.dumps(config), str(out_a)))
        at.run_experiment(json.dumps(config), str(out_b))
        names = [p["name"] for p in summary["policies"]]
        assert names == ["pg-ts", "eps"], names
        rounds_a = (out_a / "rounds.csv").read_bytes()
        rounds_b = (out_b / "rounds.csv").read_bytes()
        assert rounds_a == rounds_b and len(rounds_a) > 0

    assert len(at.list_problems()) == 3

    print("smoke test OK")


if __name__ == "__main__":
    main()
