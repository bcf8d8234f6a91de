"""A cube resting on a table has zero gradient; smoothing gives it one.

Run: python demos/null_gradient.py
"""
import numpy as np

from rsoc import NoiseConfig, TrajectoryProblem, solve, trajectory_gradient
from rsoc.costs import QuadraticGoalCost
from rsoc.models import Cube

model = Cube(mass=0.01)  # desk-scale cube, light enough for the noise to lift
cost = QuadraticGoalCost(model.position(), np.array([0.0, 0.2]), w_p=10.0, w_u=1e-2)
problem = TrajectoryProblem(model, cost.running, cost.terminal, np.zeros(4), 50)

print("raw dynamics:      max |dJ/du| = %.1e" % np.abs(trajectory_gradient(problem)).max())
for eps in (0.01, 0.1, 1.0):
    g = trajectory_gradient(problem, noise=NoiseConfig(eps, 16, seed=0))
    print("eps = %-5g M = 16: max |dJ/du| = %.1e" % (eps, np.abs(g).max()))

rep = solve(problem)
print("plain DDP: status %s after %d iterations, cost %.4f" % (rep.status, rep.iterations, rep.cost))
