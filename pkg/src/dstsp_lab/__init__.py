"""Simulation laboratory for dynamic stochastic traveling-salesman scaling laws.

The package splits into:

- ``hcp``: the abstract hierarchical collection problem on a uniform tree,
  with an exact brute-force oracle and the constructive solver.
- ``dynamics``: closed-form vehicle models (euclidean, scaled euclidean,
  reeds_shepp, diff_drive) with exact steering.
- ``agility``: Monte-Carlo reachable-set volume estimation and growth-rate
  fitting.
- ``hcs``: hierarchical cell structures over a workspace and covers built
  from them.
- ``planner``: the tour constructor that routes a vehicle through sampled
  targets via a cover, plus small exact oracles.
- ``bounds``: grid fields, envelope regularization, interaction integrals,
  and the constants that enter the scaling bounds.
- ``cbo``: cost-budgeted orienteering checks.
- ``stats``: concentration inequalities and the experiments that exercise
  them.
- ``cli``: the ``dstsp-lab`` command line front end.
"""

__version__ = "0.1.0"
