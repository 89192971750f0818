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

"""Command-line front end.

  gopt solve problem.json [--solver lp] [--epsilon 0.01] [--output out.json]
  gopt selftest

Exit status: 0 success, 1 usage or problem-file error, 2 solver rejection,
3 non-convergence (the report is still written), 4 selftest mismatch.
"""

import argparse
import logging
import sys

from gopt import errors
from gopt import exact_lp
from gopt import mopt
from gopt import oracle
from gopt import problem_file
from gopt import selftest
from gopt import sinkhorn
from gopt.enums import SolverName

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REJECTED = 2
EXIT_NOT_CONVERGED = 3
EXIT_SELFTEST_FAILED = 4
EXIT_SOLVER_FAILED = 5


class _ArgumentParser(argparse.ArgumentParser):
  """Reports usage errors with EXIT_USAGE instead of argparse's 2."""

  def error(self, message):
    self.print_usage(sys.stderr)
    self.exit(EXIT_USAGE, '%s: error: %s\n' % (self.prog, message))


def _entropic_config(parameters):
  values = {'epsilon': parameters.epsilon, 'tol': parameters.tol,
            'max_iters': parameters.max_iters}
  return sinkhorn.EntropicConfig(
      **{k: v for k, v in values.items() if v is not None})


def _dykstra_kwargs(parameters):
  values = {'max_iters': parameters.max_iters, 'tol': parameters.tol}
  return {k: v for k, v in values.items() if v is not None}


def _lp_kwargs(parameters):
  values = {'alpha': parameters.alpha, 'beta': parameters.beta}
  return {k: v for k, v in values.items() if v is not None}


def run_solver(spec):
  """Dispatches a ProblemSpec to its solver and returns the SolveReport."""
  solver = spec.solver
  parameters = spec.parameters
  if solver == SolverName.SINKHORN:
    return sinkhorn.solve_egopt(spec.gopt_problem(),
                                _entropic_config(parameters))
  if solver == SolverName.LP:
    return exact_lp.solve_gopt_lp(spec.gopt_problem())
  if solver == SolverName.SOPT:
    return exact_lp.solve_sopt(spec.cost, spec.p, spec.q)
  if solver == SolverName.SOPT_SINKHORN:
    return sinkhorn.solve_esopt(spec.cost, spec.p, spec.q,
                                _entropic_config(parameters))
  if solver == SolverName.MOPT_LP:
    return mopt.solve_mopt_lp(spec.mopt_problem(), **_lp_kwargs(parameters))
  if solver == SolverName.MOPT_DYKSTRA:
    epsilon = parameters.epsilon
    if epsilon is None:
      epsilon = sinkhorn.EntropicConfig().epsilon
    return mopt.solve_emopt_dykstra(spec.mopt_problem(), epsilon,
                                    **_dykstra_kwargs(parameters))
  if parameters.eta is not None:
    return oracle.solve_mopt_oracle(spec.mopt_problem())
  return oracle.solve_gopt_oracle(spec.gopt_problem())


def _solve(args):
  try:
    spec = problem_file.load(args.problem)
    spec = spec.with_overrides(
        solver=args.solver, epsilon=args.epsilon, eta=args.eta, tol=args.tol,
        max_iters=args.max_iters)
    report = run_solver(spec)
  except (OSError, errors.ValidationError) as e:
    logging.error('%s: %s', args.problem, e)
    return EXIT_USAGE
  except errors.SolverRejection as e:
    logging.error('%s', e)
    return EXIT_REJECTED
  except (errors.LpError, AssertionError) as e:
    # Pivot caps and failed internal consistency checks.
    logging.error('%s: solver %s failed: %s', args.problem,
                  spec.solver.flag, e)
    return EXIT_SOLVER_FAILED

  if args.output:
    with open(args.output, 'w') as f:
      problem_file.dump_report(report, spec.p.weights, spec.q.weights, f)
  else:
    problem_file.dump_report(report, spec.p.weights, spec.q.weights,
                             sys.stdout)
  if not report.converged:
    return EXIT_NOT_CONVERGED
  return EXIT_OK


def _selftest(args):
  passed, summary = selftest.run(instances=args.instances)
  sys.stdout.write(problem_file.dumps(summary))
  return EXIT_OK if passed else EXIT_SELFTEST_FAILED


def _positive_int(text):
  value = int(text)
  if value < 1:
    raise argparse.ArgumentTypeError('must be a positive integer')
  return value


def build_parser():
  parser = _ArgumentParser(
      prog='gopt', description='Generalized optimal partial transport.')
  parser.add_argument('-v', '--verbose', action='store_true',
                      help='log solver progress to stderr')
  commands = parser.add_subparsers(dest='command')
  commands.required = True

  solve = commands.add_parser('solve', help='solve a problem file')
  solve.add_argument('problem', help='path of a gopt-problem/1 JSON file')
  solve.add_argument('--solver', choices=[s.flag for s in SolverName],
                     help='override the solver named in the file')
  solve.add_argument('--epsilon', type=float)
  solve.add_argument('--eta', type=float)
  solve.add_argument('--tol', type=float)
  solve.add_argument('--max-iters', type=_positive_int)
  solve.add_argument('--output', help='write the report here, not stdout')
  solve.set_defaults(handler=_solve)

  check = commands.add_parser(
      'selftest', help='run the embedded cross-solver suite')
  check.add_argument('--instances', type=_positive_int,
                     default=selftest.INSTANCES, help=argparse.SUPPRESS)
  check.set_defaults(handler=_selftest)
  return parser


def main(argv=None):
  parser = build_parser()
  args = parser.parse_args(argv)
  logging.basicConfig(
      level=logging.DEBUG if args.verbose else logging.WARNING,
      stream=sys.stderr,
      format='%(levelname)s %(name)s: %(message)s')
  logging.captureWarnings(True)
  return args.handler(args)


if __name__ == '__main__':
  sys.exit(main())
