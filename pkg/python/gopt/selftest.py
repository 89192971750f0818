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

"""Cross-solver identity suite behind `gopt selftest`.

Each seeded instance is a PTV/PTV GOPT problem with points in the unit
square (so c <= 2) and lambdas in [2, 4], which makes transporting every
unit of the smaller measure strictly profitable.  The dense oracle and the
LP reduction must agree to LP_TOL; Sinkhorn at epsilon = 0.01 must land
within max(1e-2, 5 eps n m) of the LP value.
"""

import dataclasses
import logging
import warnings

import numpy as np

from gopt import exact_lp
from gopt import measures
from gopt import oracle
from gopt import sinkhorn
from gopt.enums import PenaltyKind

logger = logging.getLogger(__name__)

SEED = 20240917
INSTANCES = 10
EPSILON = 0.01
LP_TOL = 1e-7


@dataclasses.dataclass(frozen=True)
class InstanceResult:
  seed: int
  shape: tuple
  lp_value: float
  oracle_value: float
  sinkhorn_value: float
  sinkhorn_tol: float

  @property
  def lp_error(self):
    return abs(self.oracle_value - self.lp_value)

  @property
  def sinkhorn_error(self):
    return abs(self.sinkhorn_value - self.lp_value)

  @property
  def passed(self):
    return self.lp_error <= LP_TOL and self.sinkhorn_error <= self.sinkhorn_tol

  @property
  def badness(self):
    """Worst error relative to its tolerance."""
    return max(self.lp_error / LP_TOL,
               self.sinkhorn_error / self.sinkhorn_tol)


def make_instance(seed):
  rng = np.random.default_rng(seed)
  n, m = rng.integers(2, 5, size=2)
  xs = rng.uniform(0, 1, size=(n, 2))
  ys = rng.uniform(0, 1, size=(m, 2))
  return measures.GoptProblem(
      measures.make_cost_sq_euclidean(xs, ys),
      measures.DiscreteMeasure(rng.uniform(0.5, 2.0, size=n)),
      measures.DiscreteMeasure(rng.uniform(0.5, 2.0, size=m)),
      rng.uniform(2.0, 4.0, size=n), rng.uniform(2.0, 4.0, size=m),
      PenaltyKind.PTV, PenaltyKind.PTV)


def check_instance(seed):
  problem = make_instance(seed)
  n, m = problem.shape
  lp = exact_lp.solve_gopt_lp(problem)
  exact = oracle.solve_gopt_oracle(problem)
  with warnings.catch_warnings():
    warnings.simplefilter('ignore')
    entropic = sinkhorn.solve_egopt(
        problem, sinkhorn.EntropicConfig(epsilon=EPSILON))
  return InstanceResult(
      seed=seed,
      shape=(int(n), int(m)),
      lp_value=lp.objective.total,
      oracle_value=exact.objective.total,
      sinkhorn_value=entropic.objective.total,
      sinkhorn_tol=max(1e-2, 5 * EPSILON * n * m))


def run(seed=SEED, instances=INSTANCES):
  """Runs the suite.

  Returns:
    (passed, summary) where summary is a JSON-ready dict; on failure it
    carries the worst offender.
  """
  results = [check_instance(seed + k) for k in range(instances)]
  failures = [r for r in results if not r.passed]
  summary = {
      'instances': len(results),
      'failures': len(failures),
      'max_lp_error': max(r.lp_error for r in results),
      'max_sinkhorn_error': max(r.sinkhorn_error for r in results),
  }
  if failures:
    worst = max(failures, key=lambda r: r.badness)
    summary['worst'] = dict(dataclasses.asdict(worst),
                            shape=list(worst.shape),
                            lp_error=worst.lp_error,
                            sinkhorn_error=worst.sinkhorn_error)
    logger.error('selftest: %d of %d instances failed; worst seed %d',
                 len(failures), len(results), worst.seed)
  return not failures, summary
