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

"""Tests for mass-constrained partial transport."""

import unittest
import warnings

import numpy as np
from numpy import testing

from gopt import divergence
from gopt import errors
from gopt import measures
from gopt import mopt
from gopt import oracle
from gopt import sinkhorn


def _random_problem(rng, n, m, fraction=None):
  cost = measures.make_cost_sq_euclidean(rng.uniform(0, 1, size=(n, 2)),
                                         rng.uniform(0, 1, size=(m, 2)))
  p = rng.uniform(0.5, 1.5, size=n)
  q = rng.uniform(0.5, 1.5, size=m)
  if fraction is None:
    fraction = rng.uniform(0.1, 0.9)
  return mopt.mopt_problem(cost, p, q, fraction * min(p.sum(), q.sum()))


class MoptProblemTest(unittest.TestCase):
  def testEtaRange(self):
    self.assertRaises(errors.ValidationError, mopt.mopt_problem, [[1.0]],
                      [1.0], [2.0], 1.5)
    self.assertRaises(errors.ValidationError, mopt.mopt_problem, [[1.0]],
                      [1.0], [2.0], -0.1)
    self.assertRaises(errors.ValidationError, mopt.mopt_problem, [[1.0]],
                      [1.0], [1.0], float('nan'))

  def testRoundingExcessIsClamped(self):
    problem = mopt.mopt_problem([[1.0]], [1.0], [2.0], 1.0 + 1e-14)
    self.assertEqual(1.0, problem.eta)

  def testShapeMismatch(self):
    self.assertRaises(errors.ValidationError, mopt.mopt_problem,
                      [[1.0, 2.0]], [1.0], [1.0], 0.5)


class AugmentedMoptTest(unittest.TestCase):
  def testLayout(self):
    problem = mopt.mopt_problem([[1.0, 2.0], [3.0, 4.0]], [1.0, 1.0],
                                [1.0, 2.0], 1.0)
    augmented = mopt.build_mopt_augmented(problem)
    testing.assert_array_equal([[1.0, 2.0, 0.0], [3.0, 4.0, 0.0],
                                [0.0, 0.0, 5.0]], augmented.c_hat.entries)
    testing.assert_array_equal([1.0, 1.0, 2.0], augmented.p_hat)
    testing.assert_array_equal([1.0, 2.0, 1.0], augmented.q_hat)

  def testAlphaAndBeta(self):
    problem = mopt.mopt_problem([[1.0]], [1.0], [1.0], 0.5)
    augmented = mopt.build_mopt_augmented(problem, alpha=2.0, beta=0.5)
    testing.assert_array_equal([[1.0, 2.0], [2.0, 5.5]],
                               augmented.c_hat.entries)
    testing.assert_array_equal([1.0, 0.5], augmented.p_hat)

  def testParameterValidation(self):
    problem = mopt.mopt_problem([[1.0]], [1.0], [1.0], 0.5)
    self.assertRaises(errors.ValidationError, mopt.build_mopt_augmented,
                      problem, alpha=-1.0)
    self.assertRaises(errors.ValidationError, mopt.build_mopt_augmented,
                      problem, beta=0.0)


class SolveMoptLpTest(unittest.TestCase):
  def setUp(self):
    self.cost = [[0.0, 5.0], [5.0, 0.0]]

  def testPartialMassUsesCheapCells(self):
    report = mopt.solve_mopt_lp(mopt.mopt_problem(self.cost, [1.0, 1.0],
                                                  [1.0, 1.0], 1.0))
    self.assertEqual('mopt-lp', report.solver)
    self.assertAlmostEqual(1.0, report.plan.total_mass, places=12)
    self.assertAlmostEqual(0.0, report.primal_value, places=12)
    self.assertIsNone(report.potentials)
    self.assertAlmostEqual(0.0, report.dual_value, places=9)

  def testFullMass(self):
    report = mopt.solve_mopt_lp(mopt.mopt_problem(self.cost, [1.0, 1.0],
                                                  [1.0, 1.0], 2.0))
    testing.assert_allclose([[1.0, 0.0], [0.0, 1.0]], report.plan.matrix,
                            atol=1e-12)

  def testZeroMass(self):
    report = mopt.solve_mopt_lp(mopt.mopt_problem(self.cost, [1.0, 1.0],
                                                  [1.0, 1.0], 0.0))
    testing.assert_allclose(np.zeros((2, 2)), report.plan.matrix, atol=1e-12)
    self.assertAlmostEqual(0.0, report.primal_value, places=12)

  def testForcedExpensiveMass(self):
    report = mopt.solve_mopt_lp(mopt.mopt_problem([[0.0, 5.0]], [2.0],
                                                  [1.0, 1.0], 2.0))
    self.assertAlmostEqual(5.0, report.primal_value, places=12)

  def testValueDoesNotDependOnAlphaBeta(self):
    rng = np.random.default_rng(51)
    for _ in range(20):
      problem = _random_problem(rng, 3, 4)
      values = [mopt.solve_mopt_lp(problem, alpha, beta).primal_value
                for alpha, beta in ((0.0, 1.0), (1.0, 1.0), (2.0, 0.5),
                                    (3.0, 0.5))]
      for value in values[1:]:
        self.assertAlmostEqual(values[0], value, delta=1e-9)

  def testMatchesOracleAndClosesGap(self):
    rng = np.random.default_rng(52)
    for _ in range(30):
      problem = _random_problem(rng, 3, 3)
      report = mopt.solve_mopt_lp(problem, alpha=0.5)
      reference = oracle.solve_mopt_oracle(problem)
      self.assertAlmostEqual(reference.primal_value, report.primal_value,
                             delta=1e-7)
      self.assertLess(abs(report.gap), 1e-7)
      self.assertTrue(np.all(report.plan.row_marginal <=
                             problem.p.weights + 1e-9))
      self.assertTrue(np.all(report.plan.col_marginal <=
                             problem.q.weights + 1e-9))


class BregmanProjectionTest(unittest.TestCase):
  def testRows(self):
    projected = mopt.bregman_project_rows([[1.0, 1.0], [2.0, 2.0]],
                                          [1.0, 8.0])
    testing.assert_allclose([[0.5, 0.5], [2.0, 2.0]], projected)

  def testCols(self):
    projected = mopt.bregman_project_cols([[1.0, 1.0], [3.0, 1.0]],
                                          [2.0, 5.0])
    testing.assert_allclose([[0.5, 1.0], [1.5, 1.0]], projected)

  def testMass(self):
    testing.assert_allclose([[0.5, 1.5]],
                            mopt.bregman_project_mass([[1.0, 3.0]], 2.0))
    testing.assert_array_equal([[0.0, 0.0]],
                               mopt.bregman_project_mass([[1.0, 3.0]], 0.0))
    self.assertRaises(errors.ValidationError, mopt.bregman_project_mass,
                      [[0.0, 0.0]], 1.0)
    self.assertRaises(errors.ValidationError, mopt.bregman_project_mass,
                      [[1.0]], -1.0)

  def testRejectsNegativeEntries(self):
    self.assertRaises(errors.ValidationError, mopt.bregman_project_rows,
                      [[-1.0]], [1.0])

  def testIdempotent(self):
    rng = np.random.default_rng(53)
    gamma = rng.uniform(0, 2, size=(3, 4))
    p, q = rng.uniform(0.5, 2, size=3), rng.uniform(0.5, 2, size=4)
    once = mopt.bregman_project_rows(gamma, p)
    testing.assert_allclose(once, mopt.bregman_project_rows(once, p))
    once = mopt.bregman_project_cols(gamma, q)
    testing.assert_allclose(once, mopt.bregman_project_cols(once, q))
    once = mopt.bregman_project_mass(gamma, 1.5)
    testing.assert_allclose(once, mopt.bregman_project_mass(once, 1.5))

  def testProjectionsMinimizeKl(self):
    rng = np.random.default_rng(54)
    for _ in range(10):
      gamma = rng.uniform(0.1, 2, size=(3, 3))
      p = rng.uniform(0.5, 2, size=3)
      projected = mopt.bregman_project_rows(gamma, p)
      best = divergence.kl_divergence(projected, gamma)
      for _ in range(100):
        x = rng.uniform(0.01, 1, size=(3, 3))
        x *= np.minimum(p / x.sum(axis=1), 1.0)[:, None] * rng.uniform(0.5, 1)
        self.assertGreaterEqual(divergence.kl_divergence(x, gamma),
                                best - 1e-12)


class DykstraTest(unittest.TestCase):
  def testSymmetricInstance(self):
    problem = mopt.mopt_problem([[0.0, 5.0], [5.0, 0.0]], [1.0, 1.0],
                                [1.0, 1.0], 1.0)
    report = mopt.solve_emopt_dykstra(problem, 0.1)
    self.assertEqual('mopt-dykstra', report.solver)
    self.assertTrue(report.converged)
    testing.assert_allclose([[0.5, 0.0], [0.0, 0.5]], report.plan.matrix,
                            atol=1e-6)
    self.assertIsNone(report.dual_value)
    self.assertIsNone(report.gap)
    self.assertAlmostEqual(
        mopt.emopt_objective(problem, report.plan, 0.1),
        report.primal_value, places=12)

  def testZeroMassIsTrivial(self):
    problem = mopt.mopt_problem([[1.0]], [1.0], [1.0], 0.0)
    report = mopt.solve_emopt_dykstra(problem, 0.1)
    self.assertEqual(0, report.iterations)
    testing.assert_array_equal([[0.0]], report.plan.matrix)

  def testParameterValidation(self):
    problem = mopt.mopt_problem([[1.0]], [1.0], [1.0], 0.5)
    self.assertRaises(errors.ValidationError, mopt.solve_emopt_dykstra,
                      problem, 0.0)
    self.assertRaises(errors.ValidationError, mopt.solve_emopt_dykstra,
                      problem, 0.1, max_iters=0)

  def testResidualsShrink(self):
    rng = np.random.default_rng(55)
    for _ in range(50):
      problem = _random_problem(rng, 4, 3)
      state, converged = mopt.run_dykstra(problem, 0.1)
      self.assertTrue(converged)
      self.assertEqual(state.k, len(state.residuals))
      self.assertLess(state.residuals[-1], 1e-8)
      self.assertLessEqual(state.residuals[-1], state.residuals[0] + 1e-12)
      self.assertTrue(np.all(state.gamma > 0))
      self.assertAlmostEqual(problem.eta, state.gamma.sum(), delta=1e-8)

  def testFeasibleAfterEverySweepOnMass(self):
    rng = np.random.default_rng(56)
    problem = _random_problem(rng, 3, 3)
    state = mopt.initial_state(problem, 0.5)
    self.assertAlmostEqual(problem.eta, state.gamma.sum(), delta=1e-12)
    for _ in range(5):
      mopt.dykstra_sweep(state, problem)
      # The mass projection runs last.
      self.assertAlmostEqual(problem.eta, state.gamma.sum(), delta=1e-12)
      self.assertAlmostEqual(
          mopt.constraint_residual(problem, state.gamma),
          state.residuals[-1], places=15)

  def testApproachesLpValue(self):
    rng = np.random.default_rng(57)
    eps = 0.01
    for _ in range(50):
      problem = _random_problem(rng, 3, 3)
      exact = mopt.solve_mopt_lp(problem).primal_value
      report = mopt.solve_emopt_dykstra(problem, eps)
      self.assertTrue(report.converged)
      self.assertLessEqual(abs(report.plan.total_mass - problem.eta), 1e-8)
      self.assertLessEqual(
          mopt.constraint_residual(problem, report.plan.matrix), 1e-8)
      self.assertAlmostEqual(exact, report.objective.transport,
                             delta=max(1e-2, 5 * eps * 9))
      self.assertGreaterEqual(report.objective.transport, exact - 1e-6)

  def testConcentratesOnCheapDiagonal(self):
    problem = mopt.mopt_problem([[0.0, 4.0], [4.0, 0.0]], [1.0, 1.0],
                                [1.0, 1.0], 1.0)
    report = mopt.solve_emopt_dykstra(problem, 0.01)
    self.assertTrue(report.converged)
    self.assertGreaterEqual(np.trace(report.plan.matrix), 0.99)
    self.assertLessEqual(report.objective.transport, 0.04)
    self.assertAlmostEqual(0.0, mopt.solve_mopt_lp(problem).primal_value,
                           places=12)

  def testFullMassMatchesBalancedSinkhorn(self):
    rng = np.random.default_rng(59)
    for _ in range(5):
      cost = measures.make_cost_sq_euclidean(rng.uniform(0, 1, size=(3, 2)),
                                             rng.uniform(0, 1, size=(4, 2)))
      p = rng.uniform(0.5, 1.5, size=3)
      q = rng.dirichlet(np.ones(4)) * p.sum()
      problem = mopt.mopt_problem(cost, p, q, p.sum())
      report = mopt.solve_emopt_dykstra(problem, 0.1, tol=1e-10)
      self.assertTrue(report.converged)
      # PTV with lambda far above every potential keeps both marginals.
      balanced = sinkhorn.solve_egopt(
          measures.gopt_problem(cost, p, q, 100.0, 100.0, 'PTV', 'PTV'),
          sinkhorn.EntropicConfig(epsilon=0.1, tol=1e-12))
      self.assertTrue(balanced.converged)
      testing.assert_allclose(balanced.plan.matrix, report.plan.matrix,
                              atol=1e-6)

  def testHeuristicResidualNonIncreasingNearConvergence(self):
    rng = np.random.default_rng(60)
    for _ in range(10):
      problem = _random_problem(rng, 3, 4)
      state, converged = mopt.run_dykstra(problem, 0.05)
      self.assertTrue(converged)
      tail = np.array(state.residuals[-100:])
      self.assertTrue(np.all(np.diff(tail) <= 1e-12))

  def testNonConvergenceWarns(self):
    rng = np.random.default_rng(58)
    problem = _random_problem(rng, 3, 3)
    with warnings.catch_warnings(record=True) as caught:
      warnings.simplefilter('always')
      report = mopt.solve_emopt_dykstra(problem, 0.01, max_iters=1)
    self.assertFalse(report.converged)
    self.assertEqual(1, report.iterations)
    self.assertTrue(any('did not converge' in str(w.message) for w in caught))


if __name__ == '__main__':
  unittest.main()
