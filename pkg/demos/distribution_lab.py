"""Compare the output distribution of the resampling algorithm with the bounds.

On the shipped three-variable instance it prints, per monitor, the exact
conditional probability, the frequency of the monitor ever holding during a
run, its frequency in the final output and the bound.

    python3 demos/distribution_lab.py [trials]
"""

import json
import sys

from lllkit.analysis import empirical_ever_true
from lllkit.data import read_text
from lllkit.instances import ExplicitInstance


def main(trials: int = 20_000):
    inst = ExplicitInstance.from_dict(json.loads(read_text("distlab_3var.json")))
    monitors = list(inst.events) + inst.monitors
    rep = empirical_ever_true(inst.space, inst.events, None, monitors, trials, 0, inst.params(),
                              graph=inst.graph)
    print(f"{trials} runs; columns: exact conditional, ever true, final, bound")
    for i, m in enumerate(rep.monitors):
        kind = "event" if i < len(inst.events) else "monitor"
        print(f"{kind:7s} {m.monitor}: {m.exact:.4f}  {m.empirical:.4f}  {m.final_frequency:.4f}  {m.bound:.4f}"
              f"  {'ok' if m.passed else 'ABOVE BOUND'}")
    print("The final frequencies need not match the exact column: the algorithm does not")
    print("sample the conditional law, it only respects the upper bound.")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 20_000)
