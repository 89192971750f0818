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

"""Reference LP formulations and a dense simplex to solve them.

Slow on purpose: everything here is meant for instances with at most a few
dozen variables, where it certifies the other solvers.

Variables of lp_from_gopt are the plan entries in row-major order, followed
by (s1+, s1-) when the source side is TV and (s2+, s2-) when the target side
is TV.  A TV side is written as row_i + s_i+ - s_i- = p_i with lambda on
both slacks; a PTV side as row_i <= p_i with -lambda on the plan entries and
the constant sum lambda p moved to DenseLp.offset.
"""

import dataclasses
import itertools
import logging
import math
import typing

import numpy as np

from gopt import errors
from gopt import measures
from gopt import sinkhorn
from gopt.enums import PenaltyKind

logger = logging.getLogger(__name__)

TOL = 1e-9


def _matrix(values, columns):
  if values is None:
    return np.zeros((0, columns))
  matrix = np.array(values, dtype=float).reshape(-1, columns)
  matrix.setflags(write=False)
  return matrix


@dataclasses.dataclass(frozen=True, eq=False)
class DenseLp:
  """min objective . x + offset  s.t.  A_eq x = b_eq, A_ub x <= b_ub, x >= 0."""
  objective: np.ndarray
  A_eq: np.ndarray = None
  b_eq: np.ndarray = None
  A_ub: np.ndarray = None
  b_ub: np.ndarray = None
  offset: float = 0.0

  def __post_init__(self):
    objective = measures._frozen(self.objective, 'objective', ndim=1)
    columns = len(objective)
    A_eq = _matrix(self.A_eq, columns)
    A_ub = _matrix(self.A_ub, columns)
    b_eq = measures._frozen(
        [] if self.b_eq is None else self.b_eq, 'b_eq', ndim=1)
    b_ub = measures._frozen(
        [] if self.b_ub is None else self.b_ub, 'b_ub', ndim=1)
    if len(b_eq) != len(A_eq) or len(b_ub) != len(A_ub):
      raise errors.ValidationError(
          'constraint rows and right-hand sides differ')
    object.__setattr__(self, 'objective', objective)
    object.__setattr__(self, 'A_eq', A_eq)
    object.__setattr__(self, 'b_eq', b_eq)
    object.__setattr__(self, 'A_ub', A_ub)
    object.__setattr__(self, 'b_ub', b_ub)

  @property
  def num_variables(self):
    return len(self.objective)

  @property
  def variable_lower_bounds(self):
    return np.zeros(self.num_variables)

  def value(self, x):
    return math.fsum(self.objective * x) + self.offset


class LpSolution(typing.NamedTuple):
  x: np.ndarray
  value: float
  pivots: int


def _marginal_rows(n, m):
  """Matrices R, C with (R g)_i = row sum i, (C g)_j = column sum j."""
  rows = np.kron(np.eye(n), np.ones((1, m)))
  cols = np.kron(np.ones((1, n)), np.eye(m))
  return rows, cols


def lp_from_gopt(problem):
  """LP whose optimum is the GOPT value of problem (TV or PTV per side)."""
  n, m = problem.shape
  nm = n * m
  rows, cols = _marginal_rows(n, m)
  blocks = [(problem.penalty1, problem.lambda1, problem.p.weights, rows),
            (problem.penalty2, problem.lambda2, problem.q.weights, cols)]
  extra = sum(2 * len(lam) for kind, lam, _, _ in blocks
              if kind == PenaltyKind.TV)
  objective = np.zeros(nm + extra)
  objective[:nm] = problem.cost.entries.ravel()
  A_eq, b_eq, A_ub, b_ub = [], [], [], []
  offset = 0.0
  column = nm
  for kind, lam, weights, marginal in blocks:
    k = len(lam)
    if kind == PenaltyKind.TV:
      block = np.zeros((k, nm + extra))
      block[:, :nm] = marginal
      block[:, column:column + k] = np.eye(k)
      block[:, column + k:column + 2 * k] = -np.eye(k)
      objective[column:column + 2 * k] = np.concatenate([lam, lam])
      A_eq.append(block)
      b_eq.append(weights)
      column += 2 * k
    else:
      block = np.zeros((k, nm + extra))
      block[:, :nm] = marginal
      objective[:nm] -= lam.dot(marginal)
      offset += math.fsum(lam * weights)
      A_ub.append(block)
      b_ub.append(weights)
  return DenseLp(objective,
                 np.vstack(A_eq) if A_eq else None,
                 np.concatenate(b_eq) if b_eq else None,
                 np.vstack(A_ub) if A_ub else None,
                 np.concatenate(b_ub) if b_ub else None,
                 offset)


def lp_from_mopt(problem):
  """min <c, g> with rows <= p, cols <= q and sum g = eta."""
  n, m = problem.shape
  rows, cols = _marginal_rows(n, m)
  return DenseLp(problem.cost.entries.ravel(),
                 A_eq=np.ones((1, n * m)), b_eq=[problem.eta],
                 A_ub=np.vstack([rows, cols]),
                 b_ub=np.concatenate([problem.p.weights, problem.q.weights]))


def lp_from_sopt(cost, p, q):
  """min <c, g> with rows <= p and cols = q."""
  cost = measures.as_cost(cost)
  p = measures.as_measure(p)
  q = measures.as_measure(q)
  n, m = cost.shape
  rows, cols = _marginal_rows(n, m)
  return DenseLp(cost.entries.ravel(), A_eq=cols, b_eq=q.weights,
                 A_ub=rows, b_ub=p.weights)


def _standard_form(lp):
  """[A | b] for A x' = b, b >= 0, where x' = (x, slacks of A_ub)."""
  n_eq, n_ub = len(lp.A_eq), len(lp.A_ub)
  columns = lp.num_variables + n_ub
  A = np.zeros((n_eq + n_ub, columns))
  A[:n_eq, :lp.num_variables] = lp.A_eq
  A[n_eq:, :lp.num_variables] = lp.A_ub
  A[n_eq:, lp.num_variables:] = np.eye(n_ub)
  b = np.concatenate([lp.b_eq, lp.b_ub])
  negative = b < 0
  A[negative] *= -1
  b[negative] *= -1
  return A, b


def _pivot(tableau, basis, row, col):
  tableau[row] /= tableau[row, col]
  for r in range(tableau.shape[0]):
    if r != row and tableau[r, col] != 0:
      tableau[r] -= tableau[r, col] * tableau[row]
  basis[row] = col


def _entering(tableau, allowed):
  # Bland: lowest-index column with a negative reduced cost.
  costs = tableau[-1, :allowed]
  candidates = np.flatnonzero(costs < -TOL)
  return int(candidates[0]) if candidates.size else None


def _leaving(tableau, basis, col):
  # Minimum ratio; ties go to the lowest-index basic variable.
  column = tableau[:-1, col]
  rhs = tableau[:-1, -1]
  best, best_ratio = None, None
  for row in np.flatnonzero(column > TOL):
    ratio = rhs[row] / column[row]
    if best is None or ratio < best_ratio - TOL or (
        ratio <= best_ratio + TOL and basis[row] < basis[best]):
      best, best_ratio = int(row), ratio
  return best


def _iterate(tableau, basis, allowed, max_pivots):
  pivots = 0
  while True:
    col = _entering(tableau, allowed)
    if col is None:
      return pivots
    row = _leaving(tableau, basis, col)
    if row is None:
      raise errors.UnboundedError('objective is unbounded along column %d' %
                                  col)
    if pivots >= max_pivots:
      raise errors.LpError('simplex hit %d pivots' % pivots)
    _pivot(tableau, basis, row, col)
    pivots += 1


def simplex_solve(lp, max_pivots=100000):
  """Two-phase dense tableau simplex with Bland's rule.

  Returns:
    LpSolution(x, value, pivots) with value = objective . x + offset.

  Raises:
    InfeasibleError: if phase one ends with positive artificial mass.
    UnboundedError: if the objective decreases without bound.
  """
  A, b = _standard_form(lp)
  rows, columns = A.shape
  # Phase one: artificial basis on every row, minimize their sum.
  tableau = np.zeros((rows + 1, columns + rows + 1))
  tableau[:rows, :columns] = A
  tableau[:rows, columns:columns + rows] = np.eye(rows)
  tableau[:rows, -1] = b
  tableau[-1, :columns] = -A.sum(axis=0)
  tableau[-1, -1] = -b.sum()
  basis = list(range(columns, columns + rows))
  pivots = _iterate(tableau, basis, columns, max_pivots)
  if -tableau[-1, -1] > TOL * max(1.0, float(b.sum())):
    raise errors.InfeasibleError(
        'no feasible point: phase one ends at %.3e' % -tableau[-1, -1])

  # Drive zero-level artificials out of the basis; drop redundant rows.
  keep = []
  for row in range(rows):
    if basis[row] >= columns:
      candidates = np.flatnonzero(np.abs(tableau[row, :columns]) > TOL)
      if candidates.size == 0:
        continue
      _pivot(tableau, basis, row, int(candidates[0]))
      pivots += 1
    keep.append(row)
  body = tableau[keep][:, list(range(columns)) + [-1]]
  basis = [basis[row] for row in keep]

  # Phase two.
  cost = np.concatenate([lp.objective, np.zeros(columns - lp.num_variables)])
  objective_row = np.append(cost, 0.0) - cost[basis].dot(body)
  tableau = np.vstack([body, objective_row])
  pivots += _iterate(tableau, basis, columns, max_pivots)

  solution = np.zeros(columns)
  for row, var in enumerate(basis):
    solution[var] = tableau[row, -1]
  x = np.maximum(solution[:lp.num_variables], 0.0)
  value = lp.value(x)
  logger.debug('simplex: %d rows, %d columns, %d pivots, value %.17g',
               rows, columns, pivots, value)
  return LpSolution(x, value, pivots)


def enumerate_vertices(lp, max_variables=12):
  """All basic feasible solutions, by trying every candidate basis.

  Returns:
    List of LpSolution (pivots = 0), one per distinct vertex, in the order
    found.  An infeasible LP gives an empty list.

  Raises:
    ValidationError: if the standard form has more than max_variables
      columns.
  """
  A, b = _standard_form(lp)
  rows, columns = A.shape
  if columns > max_variables:
    raise errors.ValidationError(
        '%d standard-form variables exceed max_variables=%d' %
        (columns, max_variables))
  rank = np.linalg.matrix_rank(A) if rows else 0
  vertices = []
  seen = set()
  for subset in itertools.combinations(range(columns), rank):
    solution = np.zeros(columns)
    if rank:
      sub = A[:, subset]
      if np.linalg.matrix_rank(sub) < rank:
        continue
      values = np.linalg.lstsq(sub, b, rcond=None)[0]
      if np.max(np.abs(sub.dot(values) - b)) > 1e-9 * max(1.0, np.max(b)):
        continue
      if np.any(values < -TOL):
        continue
      solution[list(subset)] = np.maximum(values, 0.0)
    x = solution[:lp.num_variables]
    key = tuple(np.round(x, 9))
    if key in seen:
      continue
    seen.add(key)
    vertices.append(LpSolution(x, lp.value(x), 0))
  return vertices


def _report(plan, objective, solution):
  return sinkhorn.SolveReport(
      solver='oracle',
      plan=plan,
      objective=objective,
      potentials=None,
      primal_value=objective.total,
      dual_value=None,
      gap=None,
      iterations=solution.pivots,
      converged=True)


def solve_gopt_oracle(problem):
  """Solves lp_from_gopt(problem) and reports it like any other solver."""
  solution = simplex_solve(lp_from_gopt(problem))
  n, m = problem.shape
  plan = measures.TransportPlan(solution.x[:n * m].reshape(n, m))
  return _report(plan, measures.gopt_primal_objective(problem, plan), solution)


def solve_mopt_oracle(problem):
  """Solves lp_from_mopt(problem)."""
  solution = simplex_solve(lp_from_mopt(problem))
  plan = measures.TransportPlan(solution.x.reshape(problem.shape))
  transport = math.fsum((problem.cost.entries * plan.matrix).ravel())
  return _report(plan,
                 measures.ObjectiveTerms(transport, 0.0, 0.0, transport),
                 solution)


__all__ = ['DenseLp', 'LpSolution', 'lp_from_gopt', 'lp_from_mopt',
           'lp_from_sopt', 'simplex_solve', 'enumerate_vertices',
           'solve_gopt_oracle', 'solve_mopt_oracle']
