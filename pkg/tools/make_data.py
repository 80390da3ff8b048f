"""Regenerate the instances in src/lllkit/data from fixed seeds."""

import json
from pathlib import Path

from lllkit.graphs import random_bounded_degree_graph, to_edge_list
from lllkit.maxsat import regular_kcnf, to_dimacs
from lllkit.rng import derive_rng
from lllkit.santa import gen_system

OUT = Path(__file__).resolve().parents[1] / "src" / "lllkit" / "data"


def main():
    three_var = {
        "n": 3,
        "events": [{"vbl": [0, 1], "bad": [[1, 1]]}, {"vbl": [1, 2], "bad": [[1, 1]]}],
        "x": [0.5, 0.5],
        "monitors": [
            {"vbl": [0], "bad": [[1]]},
            {"vbl": [1], "bad": [[1]]},
            {"vbl": [0, 2], "bad": [[1, 1]]},
            {"vbl": [2], "bad": [[0]]},
        ],
    }
    (OUT / "distlab_3var.json").write_text(json.dumps(three_var, indent=1) + "\n")
    (OUT / "sat6_sym.cnf").write_text(to_dimacs(regular_kcnf(150, 100, 6, derive_rng(601))))
    (OUT / "sat8_alpha2.cnf").write_text(to_dimacs(regular_kcnf(700, 2000, 8, derive_rng(802))))
    (OUT / "graph_n200_d10.txt").write_text(to_edge_list(random_bounded_degree_graph(200, 10, derive_rng(200))))
    (OUT / "santa_medium.json").write_text(json.dumps(gen_system(12, 10, 256, 1.5, derive_rng(31)).to_dict()) + "\n")
    (OUT / "santa_overlap.json").write_text(
        json.dumps(gen_system(6, 3, 12, 2.0, derive_rng(32), universe=40).to_dict()) + "\n")
    (OUT / "tiny.cnf").write_text("c three clauses over four variables\np cnf 4 3\n1 -2 0\n2 3 -4 0\n-1 4 0\n")


if __name__ == "__main__":
    main()
