"""Evolve a feedback law that quiets the Landau oscillator.

A short hybrid program-evolution run: genetic exploration of instruction
matrices alternating with a simplex over the weights of the fittest
programs.  Prints the cost trajectory and the final control law.  Takes a
few minutes on one core (the first evaluation triggers JIT compilation).

    python3 demos/landau_control.py
"""

from hygopt import GaConfig, LgpConfig, RunConfig, run
from hygopt.problems import (LandauConfig, LandauCostEvaluator,
                             default_landau_layout, landau_components)

evaluator = LandauCostEvaluator(LandauConfig())
config = RunConfig(mode="lgp", seed=1, hybrid=True,
                   init_size=100, n_explor=80, n_exploit=20,
                   max_generations=10,
                   ga=GaConfig(tournament_size=7, n_elite=1,
                               p_crossover=0.55, p_mutation=0.45,
                               p_replication=0.0),
                   lgp=LgpConfig(layout=default_landau_layout()))

result = run(config, evaluator)

print("generation best costs:")
for gen, cost in enumerate(result.best_costs, start=1):
    print(f"  {gen:2d}  {cost:.6f}")

j_a, j_b = landau_components(result.best.genome, evaluator.config)
print(f"\nbest J = {result.best_cost:.6f}  "
      f"(amplitude {j_a:.6f}, actuation {j_b:.6f})")
print("control law: b =", result.best.genome.to_expression())
