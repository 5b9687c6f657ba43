"""Smoke test for the Python bindings.

Build and install first:
    cd crates/python && maturin build --release -o /tmp/wheels
    pip install --force-reinstall /tmp/wheels/fit_planner_py-*.whl
"""
import csv
import io
import json
import math

import fit_planner_py as fp


def main():
    # batch-size anchors
    assert fp.batch_size(0.0, 1, 199) == 1
    assert fp.batch_size(1.0, 1, 199) == 199
    assert fp.decay("fit-l", 0.25) == 0.25
    assert fp.batch_size(fp.decay("fit-sl", 1.0), 1, 199) == 199
    assert math.isclose(fp.unit_ball_measure(2), math.pi)
    try:
        fp.decay("fixed", 0.5)
        raise AssertionError("fixed has no decay curve")
    except ValueError:
        pass

    # an empty world is solved nearly straight
    world = fp.World.empty(2)
    problem = fp.Problem(world, [0.2, 0.5], [[0.8, 0.5]])
    result = fp.solve(problem, planner="fit-sl", iterations=20, seed=1)
    assert result.success, result
    assert result.final_cost <= 0.6 * 1.01, result
    assert result.path[0] == [0.2, 0.5] and result.path[-1] == [0.8, 0.5]
    assert json.loads(result.to_json())["success"]

    # the planner object is anytime: more batches never make the cost worse
    planner = fp.FitPlanner(fp.wall_gap(2), strategy="fit-sl", seed=3)
    first = planner.solve(iterations=5).final_cost
    second = planner.solve(iterations=20).final_cost
    assert second <= first and planner.batches == 25
    costs = [c for _, c in planner.result().trace]
    assert costs == sorted(costs, reverse=True)

    # baselines
    for name in ["rrt-connect", "informed-rrt-star"]:
        r = fp.solve(fp.wall_gap(2), planner=name, seconds=0.2, seed=2)
        assert r.success, name

    # invalid settings raise
    try:
        fp.solve(problem, eta=0.9, iterations=1)
        raise AssertionError("eta <= 1 accepted")
    except ValueError:
        pass

    # a tiny benchmark
    results, summary = fp.run_bench(["fit-sl", "fixed"], seeds=3, iterations=10, jobs=1)
    rows = list(csv.DictReader(io.StringIO(results)))
    assert len(rows) == 6
    assert len(list(csv.DictReader(io.StringIO(summary)))) == 2
    again, _ = fp.run_bench(["fit-sl", "fixed"], seeds=3, iterations=10, jobs=1)
    strip = lambda text: [{k: v for k, v in r.items() if k != "initial_time_s"} for r in csv.DictReader(io.StringIO(text))]
    assert strip(results) == strip(again)

    print("python smoke test passed")


if __name__ == "__main__":
    main()
