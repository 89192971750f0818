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

"""Tests for the command-line front end and the selftest suite."""

import io
import json
import os
import shutil
import tempfile
import unittest
from unittest import mock

import numpy as np

from gopt import cli
from gopt import errors
from gopt import exact_lp
from gopt import selftest
from gopt import sinkhorn
from gopt.enums import PenaltyKind

_DUPLICATION = {
    'format': 'gopt-problem/1',
    'source': {'weights': [1.0], 'coordinates': [[0.0]]},
    'target': {'weights': [1.0, 1.0], 'coordinates': [[0.0], [1.0]]},
    'cost_rule': 'sq_euclidean',
    'lambda1': 0.0,
    'lambda2': 100.0,
    'solver': 'sinkhorn',
    'parameters': {'epsilon': 0.01},
}

_PTV = {
    'format': 'gopt-problem/1',
    'source': {'weights': [1.0, 2.0]},
    'target': {'weights': [1.5]},
    'cost': [[1.0], [3.0]],
    'lambda1': 2.0,
    'lambda2': 2.0,
    'penalty1': 'PTV',
    'penalty2': 'PTV',
    'solver': 'lp',
}


def _broken_ptv_potential(raw, lam):
  return np.minimum(raw, lam) - 1.0


class SolveCommandTest(unittest.TestCase):
  def setUp(self):
    self.tmp = tempfile.mkdtemp()
    self.addCleanup(shutil.rmtree, self.tmp)

  def write(self, name, data):
    path = os.path.join(self.tmp, name)
    with open(path, 'w') as f:
      f.write(data if isinstance(data, str) else json.dumps(data))
    return path

  def solve(self, *args):
    """Runs `gopt solve`; returns (exit status, report dict or None)."""
    output = os.path.join(self.tmp, 'report.json')
    if os.path.exists(output):
      os.remove(output)
    status = cli.main(['solve'] + list(args) + ['--output', output])
    if not os.path.exists(output):
      return status, None
    with open(output) as f:
      return status, json.load(f)

  def testLpReport(self):
    status, report = self.solve(self.write('ptv.json', _PTV))
    self.assertEqual(cli.EXIT_OK, status)
    self.assertEqual('lp', report['solver'])
    self.assertAlmostEqual(5.5, report['primal_value'], places=12)
    self.assertAlmostEqual(0.0, report['gap'], places=7)
    self.assertEqual([[0, 0, 1.0], [1, 0, 0.5]], report['plan'])

  def testSourceDuplication(self):
    status, report = self.solve(self.write('duplication.json', _DUPLICATION))
    self.assertEqual(cli.EXIT_OK, status)
    self.assertEqual('sinkhorn', report['solver'])
    self.assertAlmostEqual(1.0, report['objective']['total'], delta=5e-2)
    self.assertEqual([1, 2], report['shape'])

  def testSolverOverride(self):
    path = self.write('duplication.json', _DUPLICATION)
    status, report = self.solve(path, '--solver', 'oracle')
    self.assertEqual(cli.EXIT_OK, status)
    self.assertAlmostEqual(1.0, report['primal_value'], places=9)
    self.assertIsNone(report['dual_value'])

    status, report = self.solve(path, '--solver', 'oracle', '--eta', '0.5')
    self.assertEqual(cli.EXIT_OK, status)
    self.assertAlmostEqual(0.0, report['primal_value'], places=9)

    status, report = self.solve(path, '--solver', 'mopt-dykstra', '--eta',
                                '0.5')
    self.assertEqual(cli.EXIT_OK, status)
    self.assertEqual('mopt-dykstra', report['solver'])
    self.assertIsNone(report['gap'])

  def testDestroyEverything(self):
    data = dict(_PTV, source={'weights': [1.0]}, target={'weights': [1.0]},
                cost=[[5.0]], lambda1=1.0, lambda2=1.0)
    status, report = self.solve(self.write('destroy.json', data))
    self.assertEqual(cli.EXIT_OK, status)
    self.assertAlmostEqual(2.0, report['objective']['total'], places=12)
    self.assertEqual([], report['plan'])

  def testZeroMassDykstra(self):
    status, report = self.solve(self.write('ptv.json', _PTV), '--solver',
                                'mopt-dykstra', '--eta', '0')
    self.assertEqual(cli.EXIT_OK, status)
    self.assertEqual([], report['plan'])
    self.assertEqual(0, report['iterations'])
    self.assertTrue(report['converged'])

  def testSoptSolvers(self):
    path = self.write('ptv.json', _PTV)
    status, report = self.solve(path, '--solver', 'sopt')
    self.assertEqual(cli.EXIT_OK, status)
    self.assertAlmostEqual(2.5, report['primal_value'], places=9)
    status, report = self.solve(path, '--solver', 'sopt-sinkhorn',
                                '--epsilon', '0.05')
    self.assertIn(status, (cli.EXIT_OK, cli.EXIT_NOT_CONVERGED))
    self.assertEqual('sopt-sinkhorn', report['solver'])

  def testTvProblemRejectedByLp(self):
    status, report = self.solve(self.write('duplication.json', _DUPLICATION),
                                '--solver', 'lp')
    self.assertEqual(cli.EXIT_REJECTED, status)
    self.assertIsNone(report)

  def testProblemFileErrors(self):
    self.assertEqual(cli.EXIT_USAGE,
                     self.solve(os.path.join(self.tmp, 'missing.json'))[0])
    self.assertEqual(cli.EXIT_USAGE,
                     self.solve(self.write('bad.json', '{"format": '))[0])
    data = dict(_PTV, lambda1=-1.0)
    self.assertEqual(cli.EXIT_USAGE,
                     self.solve(self.write('negative.json', data))[0])
    path = self.write('duplication.json', _DUPLICATION)
    self.assertEqual(cli.EXIT_USAGE,
                     self.solve(path, '--solver', 'mopt-lp')[0])

  def testNonConvergenceStillWritesReport(self):
    status, report = self.solve(self.write('duplication.json', _DUPLICATION),
                                '--epsilon', '0.001', '--max-iters', '1')
    self.assertEqual(cli.EXIT_NOT_CONVERGED, status)
    self.assertFalse(report['converged'])
    self.assertEqual(1, report['iterations'])

  def testSolverFailuresAreLogged(self):
    path = self.write('ptv.json', _PTV)
    for failure in (errors.LpError('pivot limit 0 reached'),
                    AssertionError('LP values disagree')):
      with mock.patch.object(exact_lp, 'solve_gopt_lp',
                             side_effect=failure):
        with self.assertLogs(level='ERROR') as logs:
          status, report = self.solve(path)
      self.assertEqual(cli.EXIT_SOLVER_FAILED, status)
      self.assertIsNone(report)
      self.assertIn(str(failure), logs.output[0])
      self.assertIn('solver lp failed', logs.output[0])

  def testUsageErrors(self):
    path = self.write('ptv.json', _PTV)
    for argv in (['solve', path, '--solver', 'simplex'],
                 ['solve', path, '--max-iters', '0'],
                 ['solve'], []):
      with mock.patch('sys.stderr', new_callable=io.StringIO):
        with self.assertRaises(SystemExit) as context:
          cli.main(argv)
      self.assertEqual(cli.EXIT_USAGE, context.exception.code, argv)

  def testStdoutIsByteIdentical(self):
    path = self.write('ptv.json', _PTV)
    outputs = []
    for _ in range(2):
      with mock.patch('sys.stdout', new_callable=io.StringIO) as stdout:
        self.assertEqual(cli.EXIT_OK, cli.main(['solve', path]))
      outputs.append(stdout.getvalue())
    self.assertEqual(outputs[0], outputs[1])
    self.assertTrue(outputs[0].endswith('\n'))
    self.assertEqual('gopt-report/1', json.loads(outputs[0])['format'])


class SelftestTest(unittest.TestCase):
  def run_selftest(self, instances):
    with mock.patch('sys.stdout', new_callable=io.StringIO) as stdout:
      status = cli.main(['selftest', '--instances', str(instances)])
    return status, json.loads(stdout.getvalue())

  def testPasses(self):
    status, summary = self.run_selftest(3)
    self.assertEqual(cli.EXIT_OK, status)
    self.assertEqual(3, summary['instances'])
    self.assertEqual(0, summary['failures'])
    self.assertNotIn('worst', summary)
    self.assertLess(summary['max_lp_error'], selftest.LP_TOL)

  def testInstancesAreDeterministic(self):
    first = selftest.make_instance(selftest.SEED)
    second = selftest.make_instance(selftest.SEED)
    np.testing.assert_array_equal(first.cost.entries, second.cost.entries)
    self.assertTrue(first.is_ptv)
    self.assertTrue(np.all(first.cost.entries <= 2.0))

  def testDetectsBrokenProxdiv(self):
    with mock.patch.dict(sinkhorn._PROX_POTENTIAL,
                         {PenaltyKind.PTV: _broken_ptv_potential}):
      status, summary = self.run_selftest(2)
    self.assertEqual(cli.EXIT_SELFTEST_FAILED, status)
    self.assertEqual(2, summary['failures'])
    self.assertGreater(summary['worst']['sinkhorn_error'],
                       summary['worst']['sinkhorn_tol'])

  def testInstanceResult(self):
    result = selftest.InstanceResult(seed=1, shape=(2, 2), lp_value=1.0,
                                     oracle_value=1.0, sinkhorn_value=1.005,
                                     sinkhorn_tol=0.01)
    self.assertTrue(result.passed)
    self.assertAlmostEqual(0.5, result.badness, places=9)
    result = selftest.InstanceResult(seed=1, shape=(2, 2), lp_value=1.0,
                                     oracle_value=1.0 + 1e-6,
                                     sinkhorn_value=1.0, sinkhorn_tol=0.01)
    self.assertFalse(result.passed)


if __name__ == '__main__':
  unittest.main()
