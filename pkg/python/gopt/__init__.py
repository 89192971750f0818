"""Generalized optimal partial transport (GOPT) solvers.

All public API classes and functions are exported from this module.  They
include:

- Value types for discrete measures, costs, plans and GOPT problems, with
  the objective evaluator gopt_primal_objective.  Penalty fields lambda1 and
  lambda2 may vary per atom; each side uses a TV or a PTV penalty.

- Entropy functions, f-divergences and their conjugates (divergence).

- The entropic solver, alternating closed-form proxdiv updates.  Usage:

  import gopt
  problem = gopt.gopt_problem(cost, p, q, lambda1, lambda2, 'PTV', 'PTV')
  report = gopt.solve_egopt(problem, gopt.EntropicConfig(epsilon=0.01))
  report.plan.matrix, report.gap

- Exact solvers through a balanced transportation simplex: solve_gopt_lp
  for PTV penalties, solve_sopt, and solve_mopt_lp for the mass-constrained
  problem, which also has the entropic Dykstra solver solve_emopt_dykstra.

- A dense reference simplex over explicit LP formulations (oracle), which
  handles TV penalties too and certifies everything else.

Every solver returns a SolveReport.  The command-line front end lives in
gopt.cli.
"""

from gopt.errors import *
from gopt.enums import *
from gopt.measures import *
from gopt.divergence import *
from gopt.sinkhorn import *
from gopt.exact_lp import *
from gopt.mopt import *
from gopt.oracle import *
