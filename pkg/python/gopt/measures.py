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

"""Value types for discrete transport problems.

All types are frozen dataclasses whose arrays are read-only, so a problem
can be handed to several solvers (or threads) without copying.  Invariants
are checked once, at construction, and every solver relies on them:

  - measure weights are finite and strictly positive;
  - user-facing costs are finite and non-negative (the augmented costs built
    by the LP reductions may be negative and are created with relaxed=True);
  - penalty fields are finite, non-negative and match the measure lengths;
  - plan entries are non-negative.

Typical use:

  from gopt import measures
  cost = measures.make_cost_sq_euclidean([0.0], [0.0, 1.0])
  problem = measures.gopt_problem(cost, [1.0], [1.0, 1.0],
                                  lambda1=0.0, lambda2=100.0)
  terms = measures.gopt_primal_objective(problem, [[1.0, 1.0]])
"""

import dataclasses
import math
import typing

import numpy as np

from gopt import divergence
from gopt import errors
from gopt.divergence import MARGINAL_TOL
from gopt.enums import PenaltyKind


def _frozen(values, name, ndim=None):
  try:
    array = np.array(values, dtype=float)
  except (TypeError, ValueError) as e:
    raise errors.ValidationError('%s is not numeric: %s' % (name, e))
  if ndim is not None and array.ndim != ndim:
    raise errors.ValidationError(
        '%s must have %d dimension(s), found shape %s' %
        (name, ndim, array.shape))
  array.setflags(write=False)
  return array


@dataclasses.dataclass(frozen=True, eq=False)
class DiscreteMeasure:
  """Weighted sum of Dirac masses.

  Attributes:
    weights: masses of the atoms, all strictly positive.
    labels: optional coordinates (shape (n, d)) or identifiers of the atoms.
  """
  weights: np.ndarray
  labels: typing.Optional[np.ndarray] = None

  def __post_init__(self):
    weights = _frozen(self.weights, 'weights', ndim=1)
    if weights.size == 0:
      raise errors.ValidationError('a measure needs at least one atom')
    if not np.all(np.isfinite(weights)):
      raise errors.ValidationError('weights must be finite')
    if np.any(weights <= 0):
      bad = int(np.flatnonzero(weights <= 0)[0])
      raise errors.ValidationError(
          'weight %d is %r; atoms must carry strictly positive mass' %
          (bad, float(weights[bad])))
    object.__setattr__(self, 'weights', weights)
    if self.labels is not None:
      labels = np.array(self.labels)
      if len(labels) != len(weights):
        raise errors.ValidationError(
            '%d labels for %d atoms' % (len(labels), len(weights)))
      labels.setflags(write=False)
      object.__setattr__(self, 'labels', labels)

  def __len__(self):
    return len(self.weights)

  @property
  def total_mass(self):
    return math.fsum(self.weights)


@dataclasses.dataclass(frozen=True, eq=False)
class CostMatrix:
  """n x m ground cost; rows index source atoms, columns target atoms.

  relaxed=True admits negative entries, which only the internal augmented
  problems need.
  """
  entries: np.ndarray
  relaxed: bool = False

  def __post_init__(self):
    entries = _frozen(self.entries, 'cost', ndim=2)
    if 0 in entries.shape:
      raise errors.ValidationError('cost matrix is empty: %s' %
                                   (entries.shape,))
    if not np.all(np.isfinite(entries)):
      raise errors.ValidationError('cost entries must be finite')
    if not self.relaxed and np.any(entries < 0):
      raise errors.ValidationError('cost entries must be non-negative')
    object.__setattr__(self, 'entries', entries)

  @property
  def shape(self):
    return self.entries.shape

  def max(self):
    return float(self.entries.max())


@dataclasses.dataclass(frozen=True, eq=False)
class TransportPlan:
  """Dense non-negative coupling with its marginals and total mass."""
  matrix: np.ndarray
  row_marginal: np.ndarray = dataclasses.field(init=False)
  col_marginal: np.ndarray = dataclasses.field(init=False)
  total_mass: float = dataclasses.field(init=False)

  def __post_init__(self):
    matrix = _frozen(self.matrix, 'plan', ndim=2)
    rows, cols, total = marginals(matrix)
    object.__setattr__(self, 'matrix', matrix)
    object.__setattr__(self, 'row_marginal', _frozen(rows, 'rows'))
    object.__setattr__(self, 'col_marginal', _frozen(cols, 'cols'))
    object.__setattr__(self, 'total_mass', total)

  @property
  def shape(self):
    return self.matrix.shape

  @classmethod
  def from_triplets(cls, triplets, shape):
    """Builds a plan from sparse (i, j, mass) entries."""
    matrix = np.zeros(shape)
    for i, j, mass in triplets:
      matrix[int(i), int(j)] += mass
    return cls(matrix)

  def triplets(self, threshold=1e-12):
    """Yields (i, j, mass) for entries above threshold, row-major."""
    for i, j in zip(*np.nonzero(self.matrix > threshold)):
      yield int(i), int(j), float(self.matrix[i, j])


def _penalty_field(values, length, name):
  field = np.array(values, dtype=float)
  if field.ndim == 0:
    field = np.full(length, float(field))
  field = _frozen(field, name, ndim=1)
  if len(field) != length:
    raise errors.ValidationError(
        '%s has length %d, expected %d' % (name, len(field), length))
  if not np.all(np.isfinite(field)) or np.any(field < 0):
    raise errors.ValidationError('%s must be finite and non-negative' % name)
  return field


@dataclasses.dataclass(frozen=True, eq=False)
class GoptProblem:
  """Generalized optimal partial transport instance.

  lambda1 prices creation/destruction of mass at each source atom, lambda2 at
  each target atom.  penalty1 and penalty2 select TV or PTV per side.
  """
  cost: CostMatrix
  p: DiscreteMeasure
  q: DiscreteMeasure
  lambda1: np.ndarray
  lambda2: np.ndarray
  penalty1: PenaltyKind = PenaltyKind.TV
  penalty2: PenaltyKind = PenaltyKind.TV

  def __post_init__(self):
    n, m = self.cost.shape
    if len(self.p) != n or len(self.q) != m:
      raise errors.ValidationError(
          'cost is %dx%d but measures have %d and %d atoms' %
          (n, m, len(self.p), len(self.q)))
    object.__setattr__(self, 'lambda1',
                       _penalty_field(self.lambda1, n, 'lambda1'))
    object.__setattr__(self, 'lambda2',
                       _penalty_field(self.lambda2, m, 'lambda2'))
    object.__setattr__(self, 'penalty1', PenaltyKind.from_param(self.penalty1))
    object.__setattr__(self, 'penalty2', PenaltyKind.from_param(self.penalty2))

  @property
  def shape(self):
    return self.cost.shape

  @property
  def is_ptv(self):
    return (self.penalty1 == PenaltyKind.PTV and
            self.penalty2 == PenaltyKind.PTV)


class ObjectiveTerms(typing.NamedTuple):
  """Decomposition of a GOPT objective; total may be +inf."""
  transport: float
  penalty1: float
  penalty2: float
  total: float


def as_cost(cost):
  if isinstance(cost, CostMatrix):
    return cost
  return CostMatrix(cost)


def as_measure(measure):
  if isinstance(measure, DiscreteMeasure):
    return measure
  return DiscreteMeasure(measure)


def as_plan(plan):
  if isinstance(plan, TransportPlan):
    return plan
  return TransportPlan(plan)


def gopt_problem(cost, p, q, lambda1, lambda2,
                 penalty1=PenaltyKind.TV, penalty2=PenaltyKind.TV):
  """Builds a GoptProblem from raw arrays; scalar lambdas are broadcast."""
  return GoptProblem(as_cost(cost), as_measure(p), as_measure(q),
                     lambda1, lambda2, penalty1, penalty2)


def classical_opt_problem(cost, p, q, lam, penalty=PenaltyKind.TV):
  """Classical OPT: the same constant lambda on both sides."""
  return gopt_problem(cost, p, q, lam, lam, penalty, penalty)


def make_cost_sq_euclidean(xs, ys):
  """Squared Euclidean cost between two point clouds.

  Points may be given as scalars (d = 1) or as sequences of equal length d.
  """
  xs = np.array(xs, dtype=float)
  ys = np.array(ys, dtype=float)
  if xs.ndim == 1:
    xs = xs[:, None]
  if ys.ndim == 1:
    ys = ys[:, None]
  if xs.ndim != 2 or ys.ndim != 2 or xs.shape[1] != ys.shape[1]:
    raise errors.ValidationError(
        'points must share one dimension; got shapes %s and %s' %
        (xs.shape, ys.shape))
  if xs.shape[1] < 1:
    raise errors.ValidationError('points need at least one coordinate')
  diff = xs[:, None, :] - ys[None, :, :]
  return CostMatrix(np.einsum('ijk,ijk->ij', diff, diff))


def marginals(plan):
  """Row sums, column sums and grand total of a non-negative matrix."""
  matrix = np.asarray(plan, dtype=float)
  if matrix.ndim != 2:
    raise errors.ValidationError('plan must be a matrix, got shape %s' %
                                 (matrix.shape,))
  if np.any(matrix < 0) or not np.all(np.isfinite(matrix)):
    raise errors.ValidationError('plan entries must be finite and >= 0')
  rows = matrix.sum(axis=1)
  cols = matrix.sum(axis=0)
  return rows, cols, math.fsum(matrix.ravel())


def _penalty(kind, lam, marginal, weights, tol):
  if kind == PenaltyKind.TV:
    return divergence.weighted_tv_penalty(lam, marginal, weights)
  return divergence.weighted_ptv_penalty(lam, marginal, weights, tol)


def gopt_primal_objective(problem, plan, tol=MARGINAL_TOL):
  """Evaluates the discrete GOPT objective of a plan.

  Returns:
    ObjectiveTerms(transport, penalty1, penalty2, total).  A PTV side whose
    marginal exceeds its measure by more than tol makes that penalty and the
    total +inf.
  """
  plan = as_plan(plan)
  if plan.shape != problem.shape:
    raise errors.ValidationError(
        'plan is %dx%d, problem is %dx%d' % (plan.shape + problem.shape))
  transport = math.fsum((problem.cost.entries * plan.matrix).ravel())
  penalty1 = _penalty(problem.penalty1, problem.lambda1, plan.row_marginal,
                      problem.p.weights, tol)
  penalty2 = _penalty(problem.penalty2, problem.lambda2, plan.col_marginal,
                      problem.q.weights, tol)
  return ObjectiveTerms(transport, penalty1, penalty2,
                        transport + penalty1 + penalty2)


__all__ = ['MARGINAL_TOL', 'DiscreteMeasure', 'CostMatrix', 'TransportPlan',
           'GoptProblem', 'ObjectiveTerms', 'gopt_problem',
           'classical_opt_problem', 'make_cost_sq_euclidean', 'marginals',
           'gopt_primal_objective']
