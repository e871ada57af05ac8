"""Exercise the qbeam extension module end to end.

Build and run from the repository root:

    cargo build --release -p qbeam-py --features extension-module
    cp target/release/libqbeam.so crates/py/python/qbeam.so
    python3 crates/py/python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import qbeam  # noqa: E402


def main():
    h = qbeam.Channel.rayleigh(2, 2, 7)
    assert (h.nt, h.nr) == (2, 2)
    assert qbeam.Channel.from_json(h.to_json()).rows() == h.rows()

    assert qbeam.theta_angles(2) == [math.pi / 2, math.pi]
    assert qbeam.quantize_to_phases([1j, -1], 2) == [1, 2]

    u, sigma, v = qbeam.top_singular_pair(h)
    assert abs(sigma**2 - qbeam.infinite_resolution_gain(h)) < 1e-9

    exhaustive = json.loads(qbeam.solve(h, "exhaustive", 2))
    best = max(
        qbeam.snr(h, [0, f1], [g0, g1], 2)
        for f1 in range(4)
        for g0 in range(4)
        for g1 in range(4)
    )
    assert abs(exhaustive["snr"] - best) < 1e-12

    q = qbeam.subproblem_matrix(h, exhaustive["g"]["indices"], 2)
    cost = qbeam.cost_oracle(q, 2)
    terms, offset = qbeam.build_z_hamiltonian(q, 2)
    assert abs(offset - sum(cost) / len(cost)) < 1e-9
    assert all(0 < mask < 16 for mask, _ in terms)

    r = qbeam.run_qaoa(cost, p=2, shots=512, seed=1)
    assert sum(r.histogram.values()) == 512
    assert r.best_cost == cost[r.best_bits]

    c_star, _ = qbeam.solve_relaxed(q, 2, seed=1)
    ws = qbeam.run_qaoa(cost, p=1, shots=64, seed=1, warm_start=c_star)
    assert len(ws.gammas) == 1

    try:
        qbeam.solve(h, "annealer", 2)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown solver accepted")

    try:
        qbeam.solve(qbeam.Channel.rayleigh(7, 7, 0), "exhaustive", 2)
    except qbeam.ResourceLimitError:
        pass
    else:
        raise AssertionError("enumeration budget not enforced")

    print("smoke test passed")


if __name__ == "__main__":
    main()
