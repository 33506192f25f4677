"""Hybrid vs plain-GA shootout on the Booth function.

Runs five seeds of each optimizer under the same 5000-evaluation budget
and prints the aggregate comparison table.  Takes well under a minute.

    python3 demos/benchmark_comparison.py
"""

from hygopt import GaConfig, RunConfig, compare, run_kfold, summary_text
from hygopt.problems import get_benchmark

K = 5
BUDGET = 5000

booth = get_benchmark("booth")
space = booth.space(ndim=2, bits=12)
optima = booth.grid_optima(space)
ga_params = GaConfig(tournament_size=7, n_elite=1,
                     p_crossover=0.55, p_mutation=0.45, p_replication=0.0)

hygo_cfg = RunConfig(space=space, seed=0, hybrid=True,
                     init_size=70, n_explor=70, n_exploit=30,
                     max_generations=50, max_evaluations=BUDGET,
                     known_optima=optima, ga=ga_params)
ga_cfg = RunConfig(mode="ga", space=space, seed=0, hybrid=False,
                   init_size=100, n_explor=100,
                   max_generations=50, max_evaluations=BUDGET,
                   known_optima=optima, ga=ga_params)

hygo = run_kfold(hygo_cfg, booth, k=K, problem="booth", label="hybrid")
ga = run_kfold(ga_cfg, booth, k=K, problem="booth", label="ga-only")

print(summary_text([hygo, ga]))
print()
print(compare(hygo, ga).to_text())
