# Copyright 2026 The gopt Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

"""Exact solvers built on a balanced transportation simplex.

A PTV/PTV GOPT problem is equivalent to a balanced OT problem on measures
augmented by one dummy atom each:

  c_hat = [[c - lambda1 (+) lambda2, 0], [0, 0]]
  p_hat = (p, sum q)       q_hat = (q, sum p)

The top-left n x m block of an optimal augmented plan is an optimal GOPT
plan, and the GOPT value is <c_hat, g_hat> + sum lambda1 p + sum lambda2 q.

The balanced core is the transportation (MODI) simplex: a northwest-corner
spanning tree, potentials from u_i + v_j = c_ij on the tree, Bland's rule
for the entering cell and smallest-flow/smallest-index for the leaving one.
Costs may be negative and masses may be zero.
"""

import collections
import dataclasses
import logging
import math
import typing

import numpy as np

from gopt import divergence
from gopt import errors
from gopt import measures
from gopt import sinkhorn
from gopt.enums import PenaltyKind

logger = logging.getLogger(__name__)

# Relative mass-balance tolerance of a balanced OT problem.
BALANCE_TOL = 1e-9

# Tolerance for the two GOPT value computations to agree.
VALUE_TOL = 1e-7

# Mass allowed on pruned entries by check_support_pruning.
PRUNED_MASS_TOL = 1e-9


def _masses(values, name):
  masses = measures._frozen(values, name, ndim=1)
  if masses.size == 0:
    raise errors.ValidationError('%s is empty' % name)
  if not np.all(np.isfinite(masses)) or np.any(masses < 0):
    raise errors.ValidationError('%s must be finite and >= 0' % name)
  return masses


@dataclasses.dataclass(frozen=True, eq=False)
class BalancedOtProblem:
  """min <cost, g> over couplings of row_masses and col_masses.

  Masses may be zero; their totals must agree within BALANCE_TOL relative.
  """
  cost: measures.CostMatrix
  row_masses: np.ndarray
  col_masses: np.ndarray

  def __post_init__(self):
    cost = self.cost
    if not isinstance(cost, measures.CostMatrix):
      cost = measures.CostMatrix(cost, relaxed=True)
    rows = _masses(self.row_masses, 'row_masses')
    cols = _masses(self.col_masses, 'col_masses')
    if cost.shape != (len(rows), len(cols)):
      raise errors.ValidationError(
          'cost is %dx%d but masses have lengths %d and %d' %
          (cost.shape + (len(rows), len(cols))))
    row_total, col_total = math.fsum(rows), math.fsum(cols)
    if abs(row_total - col_total) > BALANCE_TOL * max(1.0, row_total):
      raise errors.SolverRejection(
          'unbalanced masses: %.17g vs %.17g; use a GOPT or MOPT solver for '
          'partial transport' % (row_total, col_total))
    object.__setattr__(self, 'cost', cost)
    object.__setattr__(self, 'row_masses', rows)
    object.__setattr__(self, 'col_masses', cols)


@dataclasses.dataclass(frozen=True, eq=False)
class AugmentedProblem:
  """Balanced OT problem built from a partial one by adding dummy atoms.

  Attributes:
    c_hat: (n+1) x (m+1) relaxed cost.
    p_hat, q_hat: augmented masses; the last entry belongs to the dummy atom.
    origin: the GoptProblem or MoptProblem it was built from.
  """
  c_hat: measures.CostMatrix
  p_hat: np.ndarray
  q_hat: np.ndarray
  origin: typing.Any

  def __post_init__(self):
    object.__setattr__(self, 'p_hat', _masses(self.p_hat, 'p_hat'))
    object.__setattr__(self, 'q_hat', _masses(self.q_hat, 'q_hat'))

  def balanced(self):
    return BalancedOtProblem(self.c_hat, self.p_hat, self.q_hat)


class BalancedOtSolution(typing.NamedTuple):
  plan: np.ndarray
  value: float
  row_prices: np.ndarray
  col_prices: np.ndarray
  pivots: int


class _TransportationTableau(object):
  """Basic feasible solution of a transportation problem.

  The basis is always a spanning tree on the n row nodes and m column nodes,
  held as adjacency sets; flow is a dense n x m array that is zero off the
  basis.
  """

  def __init__(self, cost, supply, demand):
    self.cost = cost
    self.n, self.m = cost.shape
    self.flow = np.zeros(cost.shape)
    self.row_cells = [set() for _ in range(self.n)]
    self.col_cells = [set() for _ in range(self.m)]
    self._northwest_corner(np.array(supply), np.array(demand))

  def _add(self, i, j):
    self.row_cells[i].add(j)
    self.col_cells[j].add(i)

  def _remove(self, i, j):
    self.row_cells[i].discard(j)
    self.col_cells[j].discard(i)
    self.flow[i, j] = 0.0

  def _northwest_corner(self, supply, demand):
    # Walks a staircase from (0, 0) to (n-1, m-1): n + m - 1 cells, connected.
    i = j = 0
    while True:
      amount = min(supply[i], demand[j])
      self.flow[i, j] = amount
      self._add(i, j)
      supply[i] -= amount
      demand[j] -= amount
      if i == self.n - 1 and j == self.m - 1:
        break
      if i == self.n - 1:
        j += 1
      elif j == self.m - 1:
        i += 1
      elif supply[i] <= demand[j]:
        i += 1
      else:
        j += 1

  def potentials(self):
    """Solves u_i + v_j = c_ij on the tree with u_0 = 0."""
    u = np.full(self.n, np.nan)
    v = np.full(self.m, np.nan)
    u[0] = 0.0
    queue = collections.deque([('row', 0)])
    while queue:
      side, k = queue.popleft()
      if side == 'row':
        for j in self.row_cells[k]:
          if np.isnan(v[j]):
            v[j] = self.cost[k, j] - u[k]
            queue.append(('col', j))
      else:
        for i in self.col_cells[k]:
          if np.isnan(u[i]):
            u[i] = self.cost[i, k] - v[k]
            queue.append(('row', i))
    if np.any(np.isnan(u)) or np.any(np.isnan(v)):
      raise errors.LpError('transportation basis is not a spanning tree')
    return u, v

  def tree_path(self, i, j):
    """Cells on the tree path from row node i to column node j, in order."""
    start, goal = ('row', i), ('col', j)
    parent = {start: None}
    queue = collections.deque([start])
    while queue and goal not in parent:
      node = queue.popleft()
      side, k = node
      if side == 'row':
        neighbours = [('col', jj) for jj in sorted(self.row_cells[k])]
      else:
        neighbours = [('row', ii) for ii in sorted(self.col_cells[k])]
      for neighbour in neighbours:
        if neighbour not in parent:
          parent[neighbour] = node
          queue.append(neighbour)
    if goal not in parent:
      raise errors.LpError('no tree path from row %d to column %d' % (i, j))
    cells = []
    node = goal
    while parent[node] is not None:
      prev = parent[node]
      if node[0] == 'col':
        cells.append((prev[1], node[1]))
      else:
        cells.append((node[1], prev[1]))
      node = prev
    cells.reverse()
    return cells

  def pivot(self, i, j):
    """Brings (i, j) into the basis; returns the flow moved around the cycle."""
    path = self.tree_path(i, j)
    # Along the path from row i the signs alternate -, +, -, ..., ending in -.
    minus = path[0::2]
    plus = path[1::2]
    theta = min(self.flow[cell] for cell in minus)
    leaving = min(cell for cell in minus if self.flow[cell] == theta)
    for cell in plus:
      self.flow[cell] += theta
    for cell in minus:
      self.flow[cell] = max(self.flow[cell] - theta, 0.0)
    self.flow[i, j] = theta
    self._add(i, j)
    self._remove(*leaving)
    return theta


def _rescaled_demand(problem):
  row_total = math.fsum(problem.row_masses)
  col_total = math.fsum(problem.col_masses)
  if col_total == 0:
    return np.array(problem.col_masses)
  return problem.col_masses * (row_total / col_total)


def solve_balanced_ot(problem, max_pivots=None):
  """Exact min-cost coupling by the transportation simplex.

  Returns:
    BalancedOtSolution(plan, value, row_prices, col_prices, pivots).  The
    prices satisfy c_ij - row_i - col_j >= -1e-7 everywhere, with equality
    on the support of the plan.

  Raises:
    LpError: if the pivot cap is reached, which Bland's rule rules out for
      exact arithmetic.
  """
  cost = problem.cost.entries
  n, m = cost.shape
  if max_pivots is None:
    max_pivots = 50 * n * m * (n + m) + 100
  tableau = _TransportationTableau(cost, problem.row_masses,
                                   _rescaled_demand(problem))
  tol = 1e-10 * max(1.0, float(np.max(np.abs(cost))))
  pivots = 0
  while True:
    u, v = tableau.potentials()
    reduced = cost - u[:, None] - v[None, :]
    candidates = np.flatnonzero(reduced.ravel() < -tol)
    if candidates.size == 0:
      break
    if pivots >= max_pivots:
      raise errors.LpError('transportation simplex hit %d pivots' % pivots)
    i, j = divmod(int(candidates[0]), m)
    tableau.pivot(i, j)
    pivots += 1
  plan = tableau.flow
  value = math.fsum((cost * plan).ravel())
  logger.debug('transportation simplex on %dx%d: %d pivots, value %.17g',
               n, m, pivots, value)
  return BalancedOtSolution(plan, value, u, v, pivots)


def build_augmented(problem):
  """Augmented balanced OT problem of a PTV/PTV GOPT problem.

  Raises:
    SolverRejection: for TV penalties, which have no such reduction.
  """
  if not problem.is_ptv:
    raise errors.SolverRejection(
        'the LP reduction needs PTV penalties on both sides (got %s/%s); '
        'use the sinkhorn or oracle solver for TV penalties' %
        (problem.penalty1, problem.penalty2))
  n, m = problem.shape
  c_hat = np.zeros((n + 1, m + 1))
  c_hat[:n, :m] = (problem.cost.entries - problem.lambda1[:, None] -
                   problem.lambda2[None, :])
  p_hat = np.append(problem.p.weights, problem.q.total_mass)
  q_hat = np.append(problem.q.weights, problem.p.total_mass)
  return AugmentedProblem(measures.CostMatrix(c_hat, relaxed=True),
                          p_hat, q_hat, problem)


def augment_plan(problem, plan):
  """Rebuilds the augmented plan [g | p - g1 ; (q - g^T 1)^T | sum g]."""
  plan = measures.as_plan(plan)
  n, m = problem.shape
  matrix = np.zeros((n + 1, m + 1))
  matrix[:n, :m] = plan.matrix
  matrix[:n, m] = problem.p.weights - plan.row_marginal
  matrix[n, :m] = problem.q.weights - plan.col_marginal
  matrix[n, m] = plan.total_mass
  return matrix


def lp_dual_objective(problem, potentials, tol=1e-9):
  """Unregularized GOPT dual at LP prices.

  sum min(lambda1, phi) p + sum min(lambda2, psi) q when phi_i + psi_j <= c_ij
  (within tol), -inf otherwise.
  """
  phi, psi = potentials.phi, potentials.psi
  slack = problem.cost.entries - phi[:, None] - psi[None, :]
  if np.any(slack < -tol * (1.0 + np.abs(problem.cost.entries))):
    return -math.inf
  term1 = divergence.ptv_dual_term(problem.lambda1, phi, problem.p.weights)
  term2 = divergence.ptv_dual_term(problem.lambda2, psi, problem.q.weights)
  return term1 + term2


def solve_gopt_lp(problem):
  """Exact PTV/PTV GOPT solve through the augmented balanced OT problem.

  The value is computed both from the extracted plan and from the augmented
  objective; an AssertionError is raised if they disagree by more than
  VALUE_TOL.
  """
  augmented = build_augmented(problem)
  solution = solve_balanced_ot(augmented.balanced())
  n, m = problem.shape
  plan = measures.TransportPlan(np.maximum(solution.plan[:n, :m], 0.0))
  terms = measures.gopt_primal_objective(problem, plan)
  augmented_value = (solution.value +
                     math.fsum(problem.lambda1 * problem.p.weights) +
                     math.fsum(problem.lambda2 * problem.q.weights))
  if abs(terms.total - augmented_value) > VALUE_TOL * max(1.0, abs(
      augmented_value)):
    raise AssertionError(
        'GOPT value %.17g from the plan disagrees with %.17g from the '
        'augmented objective' % (terms.total, augmented_value))

  alpha, beta = solution.row_prices, solution.col_prices
  potentials = sinkhorn.DualPotentials(
      alpha[:n] + beta[m] + problem.lambda1,
      beta[:m] + alpha[n] + problem.lambda2,
      0.0)
  dual = lp_dual_objective(problem, potentials)
  logger.info('lp: %d pivots, value %.10g', solution.pivots, terms.total)
  return sinkhorn.SolveReport(
      solver='lp',
      plan=plan,
      objective=terms,
      potentials=potentials,
      primal_value=terms.total,
      dual_value=dual,
      gap=terms.total - dual,
      iterations=solution.pivots,
      converged=True)


def check_support_pruning(problem, plan, eps_prime):
  """True iff plan puts at most PRUNED_MASS_TOL where c - lambda1 (+) lambda2
  is at least eps_prime.
  """
  if not eps_prime > 0:
    raise errors.ValidationError('eps_prime must be > 0, got %r' % eps_prime)
  plan = measures.as_plan(plan)
  reduced = (problem.cost.entries - problem.lambda1[:, None] -
             problem.lambda2[None, :])
  pruned = math.fsum(plan.matrix[reduced >= eps_prime])
  return pruned <= PRUNED_MASS_TOL


def solve_sopt(cost, p, q):
  """Exact SOPT: column marginal = q, row marginal <= p.

  Solved as PTV GOPT with lambda1 = 0 and lambda2 = max(c) + 1, which is
  large enough to saturate every column.

  Raises:
    SolverRejection: if q carries more mass than p.
  """
  cost = measures.as_cost(cost)
  p = measures.as_measure(p)
  q = measures.as_measure(q)
  if q.total_mass > p.total_mass * (1 + 1e-12):
    raise errors.SolverRejection(
        'SOPT needs sum(q) <= sum(p) (got %.17g > %.17g); swap the measures '
        'or use the lp solver with finite lambdas' %
        (q.total_mass, p.total_mass))
  problem = measures.GoptProblem(cost, p, q, 0.0, cost.max() + 1.0,
                                 PenaltyKind.PTV, PenaltyKind.PTV)
  report = solve_gopt_lp(problem)
  transport = report.objective.transport
  return dataclasses.replace(
      report,
      solver='sopt',
      objective=measures.ObjectiveTerms(transport, 0.0, 0.0, transport),
      primal_value=transport,
      gap=transport - report.dual_value)


__all__ = ['BalancedOtProblem', 'AugmentedProblem', 'BalancedOtSolution',
           'solve_balanced_ot', 'build_augmented', 'augment_plan',
           'lp_dual_objective', 'solve_gopt_lp', 'check_support_pruning',
           'solve_sopt']
