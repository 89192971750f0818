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

"""Entropic GOPT solver.

The entropic problem

  min_g  <c, g> + eps * sum (ln g - 1) g + F1(g 1) + F2(g^T 1)

is solved on its dual by alternating closed-form updates of the scalings
u = exp(phi/eps) and v = exp(psi/eps):

  TV side:   u = clip(p / Kv, [exp(-lam/eps), exp(lam/eps)])
  PTV side:  u = min(p / Kv, exp(lam/eps))

(and symmetrically for v with K^T u), with K = exp(-c/eps).  The plan is
g_ij = u_i K_ij v_j.

The iteration tracks the potentials phi, psi rather than u, v.  Kernel images
are computed with a matrix product against a kernel into which the
potentials are periodically absorbed, and fall back to a logsumexp whenever
the product underflows, so small eps does not break the loop.

Usage:

  from gopt import measures, sinkhorn
  problem = measures.gopt_problem([[0.0]], [1.0], [1.0], 10.0, 10.0)
  report = sinkhorn.solve_egopt(problem, sinkhorn.EntropicConfig(epsilon=0.1))
  report.plan.matrix   # ~[[1.0]]
"""

import dataclasses
import logging
import math
import typing
import warnings

import numpy as np
from scipy import special

from gopt import divergence
from gopt import errors
from gopt import measures
from gopt.enums import PenaltyKind

logger = logging.getLogger(__name__)

# Kernel images below this are treated as underflowed.
_TINY_IMAGE = 1e-280


@dataclasses.dataclass(frozen=True)
class EntropicConfig:
  """Parameters of the Sinkhorn loop.

  Attributes:
    epsilon: entropic regularization strength, > 0.
    max_iters: cap on outer (u, v) iterations.
    tol: the loop stops once neither potential moves by tol or more, in
      max-norm.
    stabilization_threshold: scalings outside [1/threshold, threshold]
      relative to the absorbed kernel trigger a new absorption.
    gap_check_every: the duality gap is evaluated every this many
      iterations; a gap below tol also stops the loop.
    gap_tol: a stall of the potentials only counts as convergence when the
      duality gap is within gap_tol * max(1, |primal|).  Otherwise the loop
      keeps iterating.
  """
  epsilon: float = 0.01
  max_iters: int = 10000
  tol: float = 1e-9
  stabilization_threshold: float = 1e100
  gap_check_every: int = 50
  gap_tol: float = 1e-6

  def __post_init__(self):
    if not self.epsilon > 0 or not math.isfinite(self.epsilon):
      raise errors.ValidationError('epsilon must be > 0, got %r' % self.epsilon)
    if not self.tol > 0:
      raise errors.ValidationError('tol must be > 0, got %r' % self.tol)
    if int(self.max_iters) != self.max_iters or self.max_iters < 1:
      raise errors.ValidationError(
          'max_iters must be a positive integer, got %r' % self.max_iters)
    if not self.stabilization_threshold > 1:
      raise errors.ValidationError('stabilization_threshold must be > 1')
    if int(self.gap_check_every) != self.gap_check_every or (
        self.gap_check_every < 1):
      raise errors.ValidationError('gap_check_every must be a positive integer')
    if not self.gap_tol > 0:
      raise errors.ValidationError('gap_tol must be > 0, got %r' % self.gap_tol)


@dataclasses.dataclass(frozen=True, eq=False)
class DualPotentials:
  """Dual variables (phi, psi).

  epsilon > 0 for entropic potentials, whose scaling form is
  (exp(phi/eps), exp(psi/eps)).  Exact solvers report their LP prices with
  epsilon = 0.
  """
  phi: np.ndarray
  psi: np.ndarray
  epsilon: float

  def __post_init__(self):
    object.__setattr__(self, 'phi', measures._frozen(self.phi, 'phi', ndim=1))
    object.__setattr__(self, 'psi', measures._frozen(self.psi, 'psi', ndim=1))
    if self.epsilon < 0:
      raise errors.ValidationError('epsilon must be >= 0')

  def scalings(self):
    """Returns (u, v) = (exp(phi/eps), exp(psi/eps))."""
    if self.epsilon <= 0:
      raise errors.ValidationError('LP prices have no scaling form')
    with np.errstate(over='ignore'):
      return np.exp(self.phi / self.epsilon), np.exp(self.psi / self.epsilon)


@dataclasses.dataclass(frozen=True, eq=False)
class SolveReport:
  """Result of any gopt solver.

  Attributes:
    solver: name of the solver that produced the report.
    plan: the transport plan.
    objective: unregularized objective decomposition of the plan.
    potentials: dual potentials, or None when the solver keeps none.
    primal_value: the objective the solver minimizes (entropic solvers
      include the entropy term).
    dual_value: dual objective at potentials, or None.
    gap: primal_value - dual_value, or None.
    iterations: outer iterations, simplex pivots or projection sweeps.
    converged: False when the iteration cap was hit first.
  """
  solver: str
  plan: measures.TransportPlan
  objective: measures.ObjectiveTerms
  potentials: typing.Optional[DualPotentials]
  primal_value: float
  dual_value: typing.Optional[float]
  gap: typing.Optional[float]
  iterations: int
  converged: bool


def _check_epsilon(epsilon):
  if not epsilon > 0:
    raise errors.ValidationError('epsilon must be > 0, got %r' % epsilon)


def gibbs_kernel(cost, epsilon):
  """K = exp(-c / epsilon)."""
  _check_epsilon(epsilon)
  cost = measures.as_cost(cost)
  return np.exp(-cost.entries / epsilon)


def _ratio(target, image):
  target = np.asarray(target, dtype=float)
  image = np.asarray(image, dtype=float)
  if target.shape != image.shape:
    raise errors.ValidationError(
        'target and kernel image lengths differ: %s vs %s' %
        (target.shape, image.shape))
  if np.any(image <= 0):
    raise errors.ValidationError('kernel image must be strictly positive')
  return target / image


def proxdiv_tv(marginal_target, kernel_image, lam, epsilon):
  """Proximal-divide step of a TV penalty.

  clip(p / Kv, [exp(-lam / eps), exp(lam / eps)]).
  """
  _check_epsilon(epsilon)
  ratio = _ratio(marginal_target, kernel_image)
  lam = np.asarray(lam, dtype=float)
  with np.errstate(over='ignore'):
    return np.clip(ratio, np.exp(-lam / epsilon), np.exp(lam / epsilon))


def proxdiv_ptv(marginal_target, kernel_image, lam, epsilon):
  """Proximal-divide step of a PTV penalty: min(p/Kv, e^lam/eps)."""
  _check_epsilon(epsilon)
  ratio = _ratio(marginal_target, kernel_image)
  lam = np.asarray(lam, dtype=float)
  with np.errstate(over='ignore'):
    return np.minimum(ratio, np.exp(lam / epsilon))


def proxdiv_sopt_source(marginal_target, kernel_image):
  """Source step of the SOPT iteration: min(p/Kv, 1)."""
  return np.minimum(_ratio(marginal_target, kernel_image), 1.0)


def proxdiv_sopt_target(marginal_target, kernel_image):
  """Target step of the SOPT iteration: q/K^T u, the balanced update."""
  return _ratio(marginal_target, kernel_image)


# Potential-domain forms of the proxdiv steps.  Each maps the unconstrained
# potential eps * ln(target / image) to eps * ln(proxdiv(...)).
def _tv_potential(raw, lam):
  return np.clip(raw, -lam, lam)


def _ptv_potential(raw, lam):
  return np.minimum(raw, lam)


def _sopt_source_potential(raw, lam):
  return np.minimum(raw, 0.0)


def _sopt_target_potential(raw, lam):
  return raw


_PROX_POTENTIAL = {
    PenaltyKind.TV: _tv_potential,
    PenaltyKind.PTV: _ptv_potential,
}


class _AbsorbedKernel(object):
  """Kernel exp((a_i + b_j - c_ij)/eps) with absorbed potentials (a, b).

  log_image_rows(psi) returns ln sum_j exp((psi_j - c_ij)/eps) for the true
  potential psi, using a product with the absorbed kernel when the relative
  scaling exp((psi - b)/eps) is within the threshold and the result is
  representable, and a logsumexp otherwise.
  """

  def __init__(self, cost, epsilon, threshold):
    self.cost = cost
    self.epsilon = epsilon
    self.log_threshold = math.log(threshold)
    self.absorptions = 0
    # Row-minimum shift: every row of the first kernel has a 1 in it.
    self.absorb(cost.min(axis=1), np.zeros(cost.shape[1]))
    self.absorptions = 0

  def absorb(self, phi, psi):
    self.phi = np.array(phi, dtype=float)
    self.psi = np.array(psi, dtype=float)
    with np.errstate(over='ignore', under='ignore'):
      self.matrix = np.exp(
          (self.phi[:, None] + self.psi[None, :] - self.cost) / self.epsilon)
    self.usable = bool(np.all(np.isfinite(self.matrix)))
    self.absorptions += 1

  def _relative(self, potential, absorbed):
    log_scale = (potential - absorbed) / self.epsilon
    if np.max(np.abs(log_scale)) > self.log_threshold:
      return None
    return np.exp(log_scale)

  def log_image_rows(self, psi):
    scale = self._relative(psi, self.psi)
    if scale is None:
      self.absorb(self.phi, psi)
      scale = np.ones_like(psi)
    if self.usable:
      image = self.matrix.dot(scale)
      if np.all(image > _TINY_IMAGE) and np.all(np.isfinite(image)):
        return np.log(image) - self.phi / self.epsilon
    return special.logsumexp((psi[None, :] - self.cost) / self.epsilon, axis=1)

  def log_image_cols(self, phi):
    scale = self._relative(phi, self.phi)
    if scale is None:
      self.absorb(phi, self.psi)
      scale = np.ones_like(phi)
    if self.usable:
      image = self.matrix.T.dot(scale)
      if np.all(image > _TINY_IMAGE) and np.all(np.isfinite(image)):
        return np.log(image) - self.psi / self.epsilon
    return special.logsumexp((phi[:, None] - self.cost) / self.epsilon, axis=0)


def _plan_from_potentials(cost, phi, psi, epsilon):
  with np.errstate(under='ignore'):
    return np.exp((phi[:, None] + psi[None, :] - cost) / epsilon)


def _kernel_mass(cost, epsilon):
  with np.errstate(under='ignore'):
    return math.fsum(np.exp(-cost / epsilon).ravel())


def _alternate(cost, p, q, lam1, lam2, update1, update2, config, gap_fn):
  """Runs the alternating potential updates.

  Returns:
    (phi, psi, iterations, converged).
  """
  eps = config.epsilon
  log_p = np.log(p)
  log_q = np.log(q)
  kernel = _AbsorbedKernel(cost, eps, config.stabilization_threshold)
  # v = 1 initially; u comes from the first update.
  psi = np.zeros(cost.shape[1])
  phi = None
  converged = False
  stalled = False
  iteration = 0
  for iteration in range(1, config.max_iters + 1):
    phi_new = update1(eps * (log_p - kernel.log_image_rows(psi)), lam1)
    psi_new = update2(eps * (log_q - kernel.log_image_cols(phi_new)), lam2)
    change = np.max(np.abs(psi_new - psi))
    if phi is not None:
      change = max(change, np.max(np.abs(phi_new - phi)))
    phi, psi = phi_new, psi_new
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi))):
      warnings.warn('Numerical errors at iteration %d' % iteration)
      break
    stall = change < config.tol
    if (stall and not stalled) or iteration % config.gap_check_every == 0:
      primal, dual = gap_fn(phi, psi)
      gap = primal - dual
      logger.debug('iteration %d: potential change %.3e, gap %.3e',
                   iteration, change, gap)
      if math.isfinite(gap) and (abs(gap) <= config.tol or (
          stall and abs(gap) <= config.gap_tol * max(1.0, abs(primal)))):
        converged = True
        break
      if stall and not stalled:
        stalled = True
        logger.info('potentials stalled at iteration %d with gap %.3e; '
                    'continuing', iteration, gap)
  logger.debug('%d kernel absorptions', kernel.absorptions)
  return phi, psi, iteration, converged


def _shrink_rows(cost, phi, psi, p, epsilon):
  """Rescales u so the plan's row marginal does not exceed p."""
  rows = _plan_from_potentials(cost, phi, psi, epsilon).sum(axis=1)
  with np.errstate(divide='ignore'):
    shrink = np.minimum(np.log(p) - np.log(rows), 0.0)
  shrink[~np.isfinite(shrink)] = 0.0
  return phi + epsilon * shrink


def entropic_primal_objective(problem, plan, epsilon):
  """Entropic GOPT objective of a plan.

  Equals penalties + eps * KL(plan || K), i.e. the transport and penalty terms
  plus eps * sum (ln g - 1) g plus the constant eps * sum K that makes the
  value directly comparable with dual_objective.
  """
  _check_epsilon(epsilon)
  plan = measures.as_plan(plan)
  terms = measures.gopt_primal_objective(problem, plan)
  entropy = divergence.negative_entropy(plan.matrix)
  return terms.total + epsilon * (
      entropy + _kernel_mass(problem.cost.entries, epsilon))


def _dual_term(kind, lam, phi, mass, tol):
  if kind == PenaltyKind.TV:
    return divergence.tv_dual_term(lam, phi, mass, tol)
  return divergence.ptv_dual_term(lam, phi, mass)


def dual_objective(problem, potentials, kernel=None, tol=1e-9):
  """Entropic GOPT dual objective at (phi, psi).

    -eps sum_ij (exp((phi_i + psi_j)/eps) - 1) K_ij
      + sum_i min(lam1_i, phi_i) p_i + sum_j min(lam2_j, psi_j) q_j

  A TV side contributes -inf when its potential falls below -lambda by more
  than tol * (1 + lambda).  When kernel is None the exponential terms are
  formed from the cost directly, which avoids 0 * inf at small eps.
  """
  eps = potentials.epsilon
  _check_epsilon(eps)
  phi, psi = potentials.phi, potentials.psi
  if (len(phi), len(psi)) != problem.shape:
    raise errors.ValidationError('potentials do not match the problem shape')
  if kernel is None:
    cost = problem.cost.entries
    plan_mass = math.fsum(_plan_from_potentials(cost, phi, psi, eps).ravel())
    kernel_mass = _kernel_mass(cost, eps)
  else:
    kernel = np.asarray(kernel, dtype=float)
    with np.errstate(over='ignore'):
      scaled = np.exp((phi[:, None] + psi[None, :]) / eps) * kernel
    plan_mass = math.fsum(scaled.ravel())
    kernel_mass = math.fsum(kernel.ravel())
  term1 = _dual_term(problem.penalty1, problem.lambda1, phi,
                     problem.p.weights, tol)
  term2 = _dual_term(problem.penalty2, problem.lambda2, psi,
                     problem.q.weights, tol)
  if math.isinf(term1) or math.isinf(term2):
    return -math.inf
  return -eps * (plan_mass - kernel_mass) + term1 + term2


def solve_egopt(problem, config=None):
  """Solves an entropic GOPT problem by alternating proxdiv updates.

  Any of the four TV/PTV combinations is accepted.  Non-convergence is
  reported through converged=False (and a warning), not an exception.

  Returns:
    SolveReport whose plan is exp((phi_i + psi_j - c_ij)/eps).
  """
  config = config or EntropicConfig()
  eps = config.epsilon
  cost = problem.cost.entries
  p, q = problem.p.weights, problem.q.weights

  def gap_fn(phi, psi):
    if problem.penalty1 == PenaltyKind.PTV:
      phi = _shrink_rows(cost, phi, psi, p, eps)
    plan = _plan_from_potentials(cost, phi, psi, eps)
    return (entropic_primal_objective(problem, plan, eps),
            dual_objective(problem, DualPotentials(phi, psi, eps),
                           tol=config.tol))

  phi, psi, iterations, converged = _alternate(
      cost, p, q, problem.lambda1, problem.lambda2,
      _PROX_POTENTIAL[problem.penalty1], _PROX_POTENTIAL[problem.penalty2],
      config, gap_fn)
  if problem.penalty1 == PenaltyKind.PTV:
    phi = _shrink_rows(cost, phi, psi, p, eps)
  if not converged:
    warnings.warn(
        'Sinkhorn did not converge in %d iterations. You might want to '
        'increase max_iters or epsilon.' % iterations)

  potentials = DualPotentials(phi, psi, eps)
  plan = measures.TransportPlan(_plan_from_potentials(cost, phi, psi, eps))
  primal = entropic_primal_objective(problem, plan, eps)
  dual = dual_objective(problem, potentials, tol=config.tol)
  logger.info('sinkhorn: %d iterations, converged=%s, primal %.10g, gap %.3e',
              iterations, converged, primal, primal - dual)
  return SolveReport(
      solver='sinkhorn',
      plan=plan,
      objective=measures.gopt_primal_objective(problem, plan),
      potentials=potentials,
      primal_value=primal,
      dual_value=dual,
      gap=primal - dual,
      iterations=iterations,
      converged=converged)


def esopt_dual_objective(cost, p, q, potentials):
  """Dual of the entropic SOPT problem.

    -eps sum_ij (exp((phi_i + psi_j)/eps) - 1) K_ij
      + sum_i min(phi_i, 0) p_i + sum_j psi_j q_j
  """
  cost = measures.as_cost(cost).entries
  eps = potentials.epsilon
  _check_epsilon(eps)
  phi, psi = potentials.phi, potentials.psi
  plan_mass = math.fsum(_plan_from_potentials(cost, phi, psi, eps).ravel())
  return (-eps * (plan_mass - _kernel_mass(cost, eps)) +
          math.fsum(np.minimum(phi, 0.0) * np.asarray(p)) +
          math.fsum(psi * np.asarray(q)))


def solve_esopt(cost, p, q, config=None):
  """Entropic SOPT: row marginal <= p, column marginal = q.

  This is the GOPT iteration with lambda1 = 0 (PTV) and lambda2 -> inf, whose
  updates reduce to u = min(p/Kv, 1) and v = q/K^T u.

  Raises:
    SolverRejection: if q carries more mass than p.
  """
  config = config or EntropicConfig()
  eps = config.epsilon
  cost = measures.as_cost(cost)
  p = measures.as_measure(p)
  q = measures.as_measure(q)
  if cost.shape != (len(p), len(q)):
    raise errors.ValidationError('cost shape does not match the measures')
  if q.total_mass > p.total_mass * (1 + 1e-12):
    raise errors.SolverRejection(
        'SOPT needs sum(q) <= sum(p) (got %.17g > %.17g); swap the measures '
        'or use the sinkhorn/lp solvers with finite lambdas' %
        (q.total_mass, p.total_mass))
  c = cost.entries
  pw, qw = p.weights, q.weights

  def gap_fn(phi, psi):
    phi = _shrink_rows(c, phi, psi, pw, eps)
    plan = _plan_from_potentials(c, phi, psi, eps)
    primal = math.fsum((c * plan).ravel()) + eps * (
        divergence.negative_entropy(plan) + _kernel_mass(c, eps))
    return primal, esopt_dual_objective(cost, pw, qw,
                                        DualPotentials(phi, psi, eps))

  phi, psi, iterations, converged = _alternate(
      c, pw, qw, None, None, _sopt_source_potential, _sopt_target_potential,
      config, gap_fn)
  phi = _shrink_rows(c, phi, psi, pw, eps)
  if not converged:
    warnings.warn('SOPT Sinkhorn did not converge in %d iterations.' %
                  iterations)
  potentials = DualPotentials(phi, psi, eps)
  plan = measures.TransportPlan(_plan_from_potentials(c, phi, psi, eps))
  transport = math.fsum((c * plan.matrix).ravel())
  primal = transport + eps * (
      divergence.negative_entropy(plan.matrix) + _kernel_mass(c, eps))
  dual = esopt_dual_objective(cost, pw, qw, potentials)
  return SolveReport(
      solver='sopt-sinkhorn',
      plan=plan,
      objective=measures.ObjectiveTerms(transport, 0.0, 0.0, transport),
      potentials=potentials,
      primal_value=primal,
      dual_value=dual,
      gap=primal - dual,
      iterations=iterations,
      converged=converged)


__all__ = ['EntropicConfig', 'DualPotentials', 'SolveReport', 'gibbs_kernel',
           'proxdiv_tv', 'proxdiv_ptv', 'proxdiv_sopt_source',
           'proxdiv_sopt_target', 'entropic_primal_objective',
           'dual_objective', 'solve_egopt', 'esopt_dual_objective',
           'solve_esopt']
