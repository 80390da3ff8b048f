"""Walk through one resampling run on a small k-SAT formula.

Shows the dependency graph, the condition check, the step budget, the
resampling log and the witness tree of the last step.

    python3 demos/resampling_walkthrough.py
"""

from lllkit.analysis import build_witness_tree
from lllkit.core import (EventSet, LLLParams, VariableSpace, build_dependency_graph, check_lll,
                         compute_T, mt_run, resample_bounds)
from lllkit.data import read_text
from lllkit.maxsat import count_violated, parse_dimacs
from lllkit.rng import derive_rng


def show(node, depth=0):
    print("  " * depth + f"- clause {node.label}")
    for child in node.children:
        show(child, depth + 1)


def main():
    f = parse_dimacs(read_text("sat6_sym.cnf"))
    space = VariableSpace.uniform(f.n)
    events = EventSet(f.events())
    graph = build_dependency_graph(space, events)
    params = LLLParams.symmetric(graph)
    print(f"{f.m} clauses of width {f.k} over {f.n} variables, max dependency degree {graph.max_degree}")
    print(f"condition holds: {check_lll(events, graph, params).ok}")
    tb = compute_T(graph, params, f.n)
    print(f"T = {tb.T:.3f} ≤ n·log2(1/δ) = {tb.bound:.1f}")
    print(f"expected resamplings at most v1 = {resample_bounds(params, f.n).v1:.2f}")

    rep, log = mt_run(space, events, params, rng=derive_rng(28))
    print(f"run finished with status {rep.status} after {rep.resample_count} resamplings")
    print(f"log: {log.steps}")
    print(f"violated clauses in output: {count_violated(f, rep.assignment).total}")
    if log.steps:
        tree = build_witness_tree(log.steps, len(log.steps) - 1, graph)
        print(f"witness tree of the last step ({tree.size} nodes):")
        show(tree.root)


if __name__ == "__main__":
    main()
