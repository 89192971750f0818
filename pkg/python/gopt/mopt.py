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

"""Mass-constrained optimal partial transport (MOPT).

  min <c, g>  over g >= 0 with g 1 <= p, g^T 1 <= q, sum g = eta.

Two solvers are provided.  solve_mopt_lp reduces the problem to balanced OT
with one dummy atom per side: interior cost c, dummy row/column cost alpha,
corner cost max(c) + 2 alpha + beta, and dummy masses sum q - eta and
sum p - eta.  solve_emopt_dykstra minimizes KL(g || K) over the same set by
cycling the three KL projections with Dykstra's correction terms.
"""

import dataclasses
import logging
import math
import warnings

import numpy as np

from gopt import divergence
from gopt import errors
from gopt import exact_lp
from gopt import measures
from gopt import sinkhorn

logger = logging.getLogger(__name__)

_FLOOR = 1e-300


@dataclasses.dataclass(frozen=True, eq=False)
class MoptProblem:
  """MOPT instance; 0 <= eta <= min(sum p, sum q)."""
  cost: measures.CostMatrix
  p: measures.DiscreteMeasure
  q: measures.DiscreteMeasure
  eta: float

  def __post_init__(self):
    n, m = self.cost.shape
    if len(self.p) != n or len(self.q) != m:
      raise errors.ValidationError(
          'cost is %dx%d but measures have %d and %d atoms' %
          (n, m, len(self.p), len(self.q)))
    eta = float(self.eta)
    limit = min(self.p.total_mass, self.q.total_mass)
    if not math.isfinite(eta) or eta < 0 or eta > limit * (1 + 1e-12):
      raise errors.ValidationError(
          'eta must lie in [0, min(sum p, sum q)] = [0, %.17g], got %r' %
          (limit, self.eta))
    object.__setattr__(self, 'eta', min(eta, limit))

  @property
  def shape(self):
    return self.cost.shape


def mopt_problem(cost, p, q, eta):
  return MoptProblem(measures.as_cost(cost), measures.as_measure(p),
                     measures.as_measure(q), eta)


def build_mopt_augmented(problem, alpha=0.0, beta=1.0):
  """Balanced OT problem equivalent to a MOPT problem.

  Raises:
    ValidationError: unless alpha >= 0 and beta > 0.
  """
  if not (math.isfinite(alpha) and alpha >= 0):
    raise errors.ValidationError('alpha must be >= 0, got %r' % alpha)
  if not (math.isfinite(beta) and beta > 0):
    raise errors.ValidationError('beta must be > 0, got %r' % beta)
  n, m = problem.shape
  c_hat = np.full((n + 1, m + 1), float(alpha))
  c_hat[:n, :m] = problem.cost.entries
  c_hat[n, m] = problem.cost.max() + 2 * alpha + beta
  p_hat = np.append(problem.p.weights,
                    max(problem.q.total_mass - problem.eta, 0.0))
  q_hat = np.append(problem.q.weights,
                    max(problem.p.total_mass - problem.eta, 0.0))
  return exact_lp.AugmentedProblem(measures.CostMatrix(c_hat, relaxed=True),
                                   p_hat, q_hat, problem)


def _transport_terms(problem, plan):
  transport = math.fsum((problem.cost.entries * plan.matrix).ravel())
  return measures.ObjectiveTerms(transport, 0.0, 0.0, transport)


def solve_mopt_lp(problem, alpha=0.0, beta=1.0):
  """Exact MOPT solve; the plan is the top-left block of the augmented optimum.

  The reported dual value is the balanced OT dual minus the constant
  alpha * (sum p + sum q - 2 eta) paid on the dummy row and column.
  """
  augmented = build_mopt_augmented(problem, alpha, beta)
  solution = exact_lp.solve_balanced_ot(augmented.balanced())
  n, m = problem.shape
  plan = measures.TransportPlan(np.maximum(solution.plan[:n, :m], 0.0))
  if abs(plan.total_mass - problem.eta) > 1e-9 * max(1.0, problem.eta):
    raise AssertionError('MOPT plan carries %.17g, expected eta = %.17g' %
                         (plan.total_mass, problem.eta))
  terms = _transport_terms(problem, plan)
  dual = (math.fsum(solution.row_prices * augmented.p_hat) +
          math.fsum(solution.col_prices * augmented.q_hat) -
          alpha * (problem.p.total_mass + problem.q.total_mass -
                   2 * problem.eta))
  logger.info('mopt-lp: %d pivots, value %.10g', solution.pivots,
              terms.total)
  return sinkhorn.SolveReport(
      solver='mopt-lp',
      plan=plan,
      objective=terms,
      potentials=None,
      primal_value=terms.total,
      dual_value=dual,
      gap=terms.total - dual,
      iterations=solution.pivots,
      converged=True)


def _positive_matrix(gamma):
  gamma = np.asarray(gamma, dtype=float)
  if gamma.ndim != 2:
    raise errors.ValidationError('gamma must be a matrix')
  if np.any(gamma < 0) or not np.all(np.isfinite(gamma)):
    raise errors.ValidationError('gamma must be finite and >= 0')
  return gamma


def bregman_project_rows(gamma, p):
  """KL projection onto {g 1 <= p}: diag(min(p / g 1, 1)) g."""
  gamma = _positive_matrix(gamma)
  rows = gamma.sum(axis=1)
  with np.errstate(divide='ignore'):
    scale = np.minimum(np.asarray(p, dtype=float) / rows, 1.0)
  return gamma * scale[:, None]


def bregman_project_cols(gamma, q):
  """KL projection onto {g^T 1 <= q}: g diag(min(q / g^T 1, 1))."""
  gamma = _positive_matrix(gamma)
  cols = gamma.sum(axis=0)
  with np.errstate(divide='ignore'):
    scale = np.minimum(np.asarray(q, dtype=float) / cols, 1.0)
  return gamma * scale[None, :]


def bregman_project_mass(gamma, eta):
  """KL projection onto {sum g = eta}: g * eta / sum g.

  eta = 0 gives the zero matrix.
  """
  gamma = _positive_matrix(gamma)
  if eta < 0:
    raise errors.ValidationError('eta must be >= 0, got %r' % eta)
  if eta == 0:
    return np.zeros_like(gamma)
  total = math.fsum(gamma.ravel())
  if total <= 0:
    raise errors.ValidationError('cannot rescale a zero matrix to mass %r' %
                                 eta)
  return gamma * (eta / total)


@dataclasses.dataclass
class DykstraState:
  """Iteration state of the Dykstra loop.

  Attributes:
    gamma: current plan, strictly positive.
    correction_terms: one multiplicative correction per constraint set.
    k: completed sweeps.
    residuals: max constraint violation after each sweep.
  """
  gamma: np.ndarray
  correction_terms: list
  k: int = 0
  residuals: list = dataclasses.field(default_factory=list)


_PROJECTIONS = (
    lambda gamma, problem: bregman_project_rows(gamma, problem.p.weights),
    lambda gamma, problem: bregman_project_cols(gamma, problem.q.weights),
    lambda gamma, problem: bregman_project_mass(gamma, problem.eta),
)


def constraint_residual(problem, gamma):
  """Largest violation among rows <= p, cols <= q and sum = eta."""
  rows = gamma.sum(axis=1) - problem.p.weights
  cols = gamma.sum(axis=0) - problem.q.weights
  return max(float(np.max(rows)), float(np.max(cols)), 0.0,
             abs(math.fsum(gamma.ravel()) - problem.eta))


def initial_state(problem, epsilon):
  """gamma0 = K eta / sum K, with c shifted by its minimum."""
  cost = problem.cost.entries
  with np.errstate(under='ignore'):
    kernel = np.exp(-(cost - cost.min()) / epsilon)
  gamma = np.maximum(kernel * (problem.eta / math.fsum(kernel.ravel())),
                     _FLOOR)
  return DykstraState(gamma, [np.ones_like(gamma) for _ in _PROJECTIONS])


def dykstra_sweep(state, problem):
  """One cycle over rows, cols and mass; returns the max plan change."""
  start = state.gamma
  gamma = start
  for index, project in enumerate(_PROJECTIONS):
    correction = state.correction_terms[index]
    projected = np.maximum(project(gamma * correction, problem), _FLOOR)
    state.correction_terms[index] = correction * gamma / projected
    gamma = projected
  state.gamma = gamma
  state.k += 1
  state.residuals.append(constraint_residual(problem, gamma))
  return float(np.max(np.abs(gamma - start)))


def run_dykstra(problem, epsilon, max_iters=50000, tol=1e-8):
  """Iterates sweeps until residual + plan change < tol.

  Returns:
    (state, converged).
  """
  state = initial_state(problem, epsilon)
  while state.k < max_iters:
    change = dykstra_sweep(state, problem)
    if not np.all(np.isfinite(state.gamma)):
      warnings.warn('Numerical errors at iteration %d' % state.k)
      return state, False
    if state.residuals[-1] + change < tol:
      return state, True
    if state.k % 1000 == 0:
      logger.debug('sweep %d: residual %.3e, change %.3e', state.k,
                   state.residuals[-1], change)
  return state, False


def emopt_objective(problem, plan, epsilon):
  """eps * KL(plan || K) with K = exp(-c / eps)."""
  plan = measures.as_plan(plan)
  cost = problem.cost.entries
  with np.errstate(under='ignore'):
    kernel_mass = math.fsum(np.exp(-cost / epsilon).ravel())
  transport = math.fsum((cost * plan.matrix).ravel())
  return transport + epsilon * (
      divergence.negative_entropy(plan.matrix) + kernel_mass)


def solve_emopt_dykstra(problem, epsilon, max_iters=50000, tol=1e-8):
  """Entropic MOPT by Dykstra's algorithm with KL projections.

  eta = 0 returns the zero plan without iterating.  No dual is maintained,
  so dual_value and gap are None.
  """
  if not (epsilon > 0 and math.isfinite(epsilon)):
    raise errors.ValidationError('epsilon must be > 0, got %r' % epsilon)
  if int(max_iters) != max_iters or max_iters < 1:
    raise errors.ValidationError('max_iters must be a positive integer')
  if problem.eta == 0:
    plan = measures.TransportPlan(np.zeros(problem.shape))
    return sinkhorn.SolveReport(
        solver='mopt-dykstra', plan=plan,
        objective=_transport_terms(problem, plan), potentials=None,
        primal_value=0.0, dual_value=None, gap=None, iterations=0,
        converged=True)

  state, converged = run_dykstra(problem, epsilon, max_iters, tol)
  if not converged:
    warnings.warn(
        'Dykstra did not converge in %d sweeps (residual %.3e).' %
        (state.k, state.residuals[-1] if state.residuals else math.nan))
  plan = measures.TransportPlan(state.gamma)
  primal = emopt_objective(problem, plan, epsilon)
  logger.info('mopt-dykstra: %d sweeps, converged=%s, residual %.3e',
              state.k, converged, state.residuals[-1])
  return sinkhorn.SolveReport(
      solver='mopt-dykstra',
      plan=plan,
      objective=_transport_terms(problem, plan),
      potentials=None,
      primal_value=primal,
      dual_value=None,
      gap=None,
      iterations=state.k,
      converged=converged)


__all__ = ['MoptProblem', 'mopt_problem', 'build_mopt_augmented',
           'solve_mopt_lp', 'bregman_project_rows', 'bregman_project_cols',
           'bregman_project_mass', 'DykstraState', 'constraint_residual',
           'run_dykstra', 'emopt_objective', 'solve_emopt_dykstra']
