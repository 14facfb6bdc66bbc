"""Smoke test for the skewflow Python module.

Build and install first, e.g. ``maturin develop -m crates/python/Cargo.toml``,
then run ``python python/smoke_test.py``.
"""

import json
import math
import sys
import tempfile
from pathlib import Path

import skewflow


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    assert "inverse-linear" in skewflow.gallery_names()

    il = skewflow.System("inverse-linear")
    value, stderr = il.mean(3.0, 1.0)
    assert value == 0.5 and stderr == 0.0, (value, stderr)

    residuals = il.law_residuals(triples=1000, seed=3)
    assert max(residuals) <= 1e-9, residuals

    cont = il.datko_continuous(1.0)
    assert cont["converged"] and close(cont["norm_value"], 2 * math.log(2), 1e-6), cont["norm_value"]

    disc = il.datko_discrete(1.0, horizon=100_000)
    assert close(disc["norm_value"], 2.0, 1e-4), disc["norm_value"]

    lg = skewflow.System("linear-growth")
    inst = lg.datko_continuous(1.0, instability=True)
    assert close(inst["norm_value"], 2 * math.log(2), 1e-6)

    alpha, k, k1, gamma = skewflow.lemma_constants_stable(1.0, 1.0, 1.0, 2 / 3, 2, 1.0)
    assert close(alpha, math.log(1.5) / math.log(2), 1e-12)
    assert close(k1, 3.0, 1e-12) and close(k, 3 * 1.5 ** (1 + alpha), 1e-12)
    pairs = [(s * m, s) for s in (2, 5, 10, 50) for m in (1, 2, 10, 100, 1000)]
    assert skewflow.count_decay_violations(il, alpha, k, gamma, pairs) == 0

    margins = skewflow.class_h([4, 16, 64, 256], list(range(1, 101)))
    assert margins["nondecreasing"] and margins["margins"][-1]["margin"] > 3.0

    verdicts = {
        name: skewflow.System(name).classify(horizon=10_000)["outcome"]
        for name in ("inverse-linear", "linear-growth", "constant-identity")
    }
    assert verdicts == {
        "inverse-linear": "StableInMean",
        "linear-growth": "UnstableInMean",
        "constant-identity": "Inconclusive",
    }, verdicts

    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "config.json"
        cfg.write_text(json.dumps({
            "system": {"gallery": {"name": "inverse-linear"}},
            "analyses": ["laws", "classify"],
            "horizon": 10000,
        }))
        report = skewflow.run_analysis(str(cfg), str(Path(tmp) / "out"), seed=5)
        assert report["seed"] == 5
        assert report["classify"]["verdict"]["outcome"] == "StableInMean"
        try:
            skewflow.run_analysis(str(Path(tmp) / "missing.json"), tmp)
        except ValueError:
            pass
        else:
            raise AssertionError("missing config accepted")

    print("skewflow smoke test passed:", verdicts)
    return 0


if __name__ == "__main__":
    sys.exit(main())
