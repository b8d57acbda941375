"""
Compares the Δ-equivalence decision with the brute-force pullback oracle on
all pairs of graphs with at most five vertices (up to isomorphism).
"""

import logging_config
from ncgraph import enumerate_graphs, decide_delta_graphs, brute_force_pullback_targets, PullbackWitness

from itertools import combinations_with_replacement

import pandas as pd

run_logger = logging_config.get_run_logger(__name__)


def sweep(max_vertices: int = 5) -> pd.DataFrame:
    """
    Decides every pair of graphs on at most `max_vertices` vertices.

    Returns:
        One row per pair with the decision, the oracle and whether they agree.
    """
    graphs = [g for n in range(1, max_vertices + 1) for g in enumerate_graphs(n)]
    targets = [brute_force_pullback_targets(g, max_vertices) for g in graphs]
    rows = []
    for i, j in combinations_with_replacement(range(len(graphs)), 2):
        g, h = graphs[i], graphs[j]
        decided = isinstance(decide_delta_graphs(g, h), PullbackWitness)
        oracle = bool(targets[i] & targets[j])
        rows.append({'g': i, 'h': j, 'n_g': g.n, 'n_h': h.n,
                     'decision': decided, 'oracle': oracle, 'agree': decided == oracle})
    return pd.DataFrame(rows)


if __name__ == '__main__':
    results = sweep()
    summary = results.groupby(['n_g', 'n_h']).agg(pairs=('agree', 'size'),
                                                  equivalent=('decision', 'sum'),
                                                  agree=('agree', 'all'))
    print(summary.to_string())
    disagreements = results[~results['agree']]
    run_logger.info(f'Oracle sweep: {len(results)} pairs, {len(disagreements)} disagreements.')
    for row in disagreements.itertuples():
        run_logger.error(f'Disagreement on graphs {row.g} and {row.h}: '
                         f'decision {row.decision}, oracle {row.oracle}.')
