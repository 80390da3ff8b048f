"""One run of each application on the shipped inputs.

    python3 demos/applications_tour.py
"""

from lllkit.acyclic import find_acyclic_violation, mt_acyclic_16, mt_acyclic_girth
from lllkit.data import read_text
from lllkit.graphs import cycle_graph, parse_edge_list, path_graph
from lllkit.maxsat import parse_dimacs, solve_beyond_threshold
from lllkit.nonrep import mt_nonrep, verify_nonrepetitive_full
from lllkit.rng import derive_rng
from lllkit.santa import KLBSystem, solve


def main():
    f = parse_dimacs(read_text("sat8_alpha2.cnf"))
    rep = solve_beyond_threshold(f, 2.0, derive_rng(1))
    print(f"MAX-8-SAT, degree up to twice the threshold: {rep.violated_total}/{f.m} clauses violated "
          f"(expected at most {rep.expected_bound:.2f}), core of {rep.core_size} clauses fully satisfied")

    g = parse_edge_list(read_text("graph_n200_d10.txt"))
    res = mt_acyclic_16(g, derive_rng(2))
    print(f"acyclic colouring of a 200-vertex graph with Δ = {g.max_degree}: palette {res.palette}, "
          f"{res.colors_used} colours used, {res.report.resample_count} recolourings, "
          f"verified = {find_acyclic_violation(g, res.coloring) is None}")

    c64 = cycle_graph(64)
    res = mt_acyclic_girth(c64, derive_rng(3))
    print(f"C64 via the high-girth variant: {res.colors_used} colours, "
          f"verified = {find_acyclic_violation(c64, res.coloring) is None}")

    p = path_graph(9)
    res = mt_nonrep(p, 0.2, derive_rng(4), palette_override=4, L=4)
    print(f"non-repetitive colouring of an 8-edge path with 4 colours: {res.coloring}, "
          f"verified = {verify_nonrepetitive_full(p, res.coloring)}")

    S = KLBSystem.from_json(read_text("santa_medium.json"))
    out = solve(S, 5)
    print(f"(k,l,β)-system with p={S.p}, l={S.l}, k={S.k}: steps {[st.kind for st in out.trace]}, "
          f"certified γ = {out.gamma_final:.4f}, achieved γ = {out.gamma_achieved:.3f}")


if __name__ == "__main__":
    main()
