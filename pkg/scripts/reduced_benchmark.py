"""BO versus random search on the reduced composition space.

Prints the exhaustive best-EDP table, then evaluations-to-optimum for both
searches over a range of seeds. All searches share one memoised objective,
so they are scored against the same oracle.

    python scripts/reduced_benchmark.py [n_seeds]
"""

import statistics
import sys

from chipletdse.optimizer.outer import (OuterObjective, co_optimize, evaluations_to_optimum,
                                        exhaustive_optimum, random_search)
from chipletdse.scenario import load_scenario


def main(n_seeds: int = 20) -> None:
    scn = load_scenario("scenario_reduced")
    space = scn.space()
    o = scn.optimizer
    obj = OuterObjective(space, o.inner_budget, o.seed, o.solver)
    best, argbest = exhaustive_optimum(space, obj)
    n = len(obj.cache)
    print(f"{n} feasible compositions, optimum {best:.6g} at {len(argbest)} of them")
    for i in range(space.max_counts[0] + 1):
        row = [obj.cache.get((i, j)) for j in range(space.max_counts[1] + 1)]
        print(" ".join(f"{r.edp:10.4g}" if r else "         -" for r in row))
    bo, rs = [], []
    for s in range(n_seeds):
        bo.append(evaluations_to_optimum(co_optimize(scn.problem, n, o.inner_budget, s, space=space,
                                                     n0=o.n0, objective=obj).trace, best))
        rs.append(evaluations_to_optimum(random_search(scn.problem, n, o.inner_budget, s, space=space,
                                                       objective=obj).trace, best))
    hit = sum(1 for e in bo[:10] if e is not None and e <= o.outer_budget)
    print(f"BO at {o.outer_budget} evaluations: {hit}/{min(10, n_seeds)} seeds")
    print(f"median evaluations to optimum: BO {statistics.median(bo)}  random {statistics.median(rs)}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 20)
