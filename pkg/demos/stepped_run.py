"""Stepped optimization: solve half the problem first, then expand.

Stage 1 freezes dimensions 5..9 of a 10-D Rosenbrock at 1.0 and optimizes
the rest; stage 2 releases everything, seeding the population with stage
1's best point.  The stepped run is compared against a single run with
the same total budget.  Takes a few seconds.

    python3 demos/stepped_run.py
"""

from hygopt import GaConfig, RunConfig, StageSpec, run, run_stepped
from hygopt.problems import get_benchmark

rosen = get_benchmark("rosenbrock")
space = rosen.space(ndim=10, bits=12)
ga_params = GaConfig(tournament_size=7, n_elite=1,
                     p_crossover=0.55, p_mutation=0.45, p_replication=0.0)

def base_config(seed):
    return RunConfig(space=space, seed=seed, hybrid=True,
                     init_size=70, n_explor=70, n_exploit=30,
                     max_generations=50, ga=ga_params)

stages = [StageSpec(frozen={d: 1.0 for d in range(5, 10)},
                    max_evaluations=1000),
          StageSpec(max_evaluations=1000)]

for seed in range(3):
    stepped = run_stepped(stages, base_config(seed), rosen)
    single = run(RunConfig(space=space, seed=seed, hybrid=True,
                           init_size=70, n_explor=70, n_exploit=30,
                           max_generations=50, max_evaluations=2000,
                           ga=ga_params), rosen)
    verdict = "stepped wins" if stepped.best_cost < single.best_cost \
        else "single wins"
    print(f"seed {seed}: stepped {stepped.best_cost:10.4f}   "
          f"single {single.best_cost:10.4f}   -> {verdict}")
