"""EDP of the canonical baseline design under each NoI on a workload fixture.

    python scripts/noi_edp.py [workload]
"""

import sys

from chipletdse.calibration import BASELINE_COUNTS
from chipletdse.catalog import Composition, InterposerSpec, load_catalog
from chipletdse.optimizer.problem import Evaluator, Problem, baseline_design
from chipletdse.topology import KINDS
from chipletdse.workload import load_workload


def main(wl: str = "wl1") -> None:
    cat = load_catalog()
    workload = load_workload(wl)
    ip = InterposerSpec.square("Silicon", 440.0)
    comp = Composition.of(BASELINE_COUNTS)
    for kind in KINDS:
        pr = Problem(cat, workload, ip, kind)
        p = Evaluator(pr).evaluate(baseline_design(pr, comp), require_admissible=False)
        e = p.evaluation
        print(f"{kind:<9} edp {e.edp:.4g}  latency {e.latency_s:.4g}  energy {e.energy_j:.4g}")


if __name__ == "__main__":
    main(*sys.argv[1:])
