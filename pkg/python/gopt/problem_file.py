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

"""Problem and report files.

A problem file is a JSON object:

  {
    "format": "gopt-problem/1",
    "source": {"weights": [1.0], "coordinates": [[0.0]]},
    "target": {"weights": [1.0, 1.0], "coordinates": [[0.0], [1.0]]},
    "cost_rule": "sq_euclidean",          # or "cost": [[0.0, 1.0]]
    "lambda1": 0.0,                       # scalar or one value per atom
    "lambda2": [100.0, 100.0],
    "penalty1": "TV", "penalty2": "TV",
    "solver": "sinkhorn",
    "parameters": {"epsilon": 0.01}
  }

Exactly one of "cost" and "cost_rule" must be present, and coordinates are
required exactly when the cost rule is used.  Lambdas are broadcast to
vectors here so the solvers never see scalars.  MOPT solvers read eta from
parameters and ignore the lambdas; SOPT solvers ignore them too.

Reports are JSON with sorted keys.  Floats are written with repr, which
round-trips exactly, so the same input always gives the same bytes.
Non-finite values, such as the objective of a plan that breaks a PTV bound,
are written as the strings "inf", "-inf" and "nan" so reports stay strict
JSON.
"""

import dataclasses
import json
import math
import typing

import numpy as np

from gopt import errors
from gopt import measures
from gopt import mopt
from gopt.enums import PenaltyKind
from gopt.enums import SolverName

FORMAT = 'gopt-problem/1'
REPORT_FORMAT = 'gopt-report/1'

# Plan entries at or below this are left out of reports.
TRIPLET_THRESHOLD = 1e-12

_TOP_LEVEL = frozenset([
    'format', 'source', 'target', 'cost', 'cost_rule', 'lambda1', 'lambda2',
    'penalty1', 'penalty2', 'solver', 'parameters'])
_PARAMETERS = frozenset(['epsilon', 'eta', 'alpha', 'beta', 'tol',
                         'max_iters'])
_COST_RULES = {'sq_euclidean': measures.make_cost_sq_euclidean}
_LAMBDA_FREE = (SolverName.MOPT_LP, SolverName.MOPT_DYKSTRA, SolverName.SOPT,
                SolverName.SOPT_SINKHORN)


@dataclasses.dataclass(frozen=True)
class SolverParameters:
  """Optional solver settings; None means the solver's default."""
  epsilon: typing.Optional[float] = None
  eta: typing.Optional[float] = None
  alpha: typing.Optional[float] = None
  beta: typing.Optional[float] = None
  tol: typing.Optional[float] = None
  max_iters: typing.Optional[int] = None


@dataclasses.dataclass(frozen=True, eq=False)
class ProblemSpec:
  """Validated contents of a problem file."""
  solver: SolverName
  cost: measures.CostMatrix
  p: measures.DiscreteMeasure
  q: measures.DiscreteMeasure
  lambda1: typing.Optional[np.ndarray]
  lambda2: typing.Optional[np.ndarray]
  penalty1: PenaltyKind
  penalty2: PenaltyKind
  parameters: SolverParameters

  @property
  def shape(self):
    return self.cost.shape

  def gopt_problem(self):
    if self.lambda1 is None or self.lambda2 is None:
      raise errors.ProblemFileError('required by a GOPT solver',
                                    field='lambda1' if self.lambda1 is None
                                    else 'lambda2')
    return measures.GoptProblem(self.cost, self.p, self.q, self.lambda1,
                                self.lambda2, self.penalty1, self.penalty2)

  def mopt_problem(self):
    if self.parameters.eta is None:
      raise errors.ProblemFileError('required by a MOPT solver',
                                    field='parameters.eta')
    try:
      return mopt.MoptProblem(self.cost, self.p, self.q, self.parameters.eta)
    except errors.ValidationError as e:
      raise errors.ProblemFileError(str(e), field='parameters.eta')

  def with_overrides(self, solver=None, **parameters):
    """Copy with the solver and any non-None parameters replaced."""
    changes = {k: v for k, v in parameters.items() if v is not None}
    return dataclasses.replace(
        self,
        solver=self.solver if solver is None else _solver(solver, 'solver'),
        parameters=dataclasses.replace(self.parameters, **changes))


def _is_number(value):
  return (isinstance(value, (int, float)) and not isinstance(value, bool))


def _number(value, field):
  if not _is_number(value) or not math.isfinite(value):
    raise errors.ProblemFileError('expected a finite number, got %r' %
                                  (value,), field=field)
  return float(value)


def _numbers(value, field):
  if not isinstance(value, list) or not value:
    raise errors.ProblemFileError('expected a non-empty list of numbers',
                                  field=field)
  return [_number(item, '%s[%d]' % (field, i)) for i, item in enumerate(value)]


def _matrix(value, field):
  if not isinstance(value, list) or not value:
    raise errors.ProblemFileError('expected a non-empty list of rows',
                                  field=field)
  rows = [_numbers(row, '%s[%d]' % (field, i)) for i, row in enumerate(value)]
  for i, row in enumerate(rows):
    if len(row) != len(rows[0]):
      raise errors.ProblemFileError(
          'row has %d entries, expected %d' % (len(row), len(rows[0])),
          field='%s[%d]' % (field, i))
  return rows


def _object(value, field, allowed):
  if not isinstance(value, dict):
    raise errors.ProblemFileError('expected an object', field=field or None)
  for key in sorted(value):
    if key not in allowed:
      prefix = field + '.' if field else ''
      raise errors.ProblemFileError('unknown field', field=prefix + key)
  return value


def _enum(enum_type, value, field):
  if not isinstance(value, str):
    raise errors.ProblemFileError('expected a string', field=field)
  try:
    return enum_type.from_param(value)
  except ValueError as e:
    raise errors.ProblemFileError(str(e), field=field)


def _solver(value, field):
  return _enum(SolverName, value, field)


def _measure(data, field, with_coordinates):
  data = _object(data, field, ('weights', 'coordinates'))
  if 'weights' not in data:
    raise errors.ProblemFileError('missing', field=field + '.weights')
  weights = _numbers(data['weights'], field + '.weights')
  coordinates = None
  if with_coordinates:
    if 'coordinates' not in data:
      raise errors.ProblemFileError('required by cost_rule',
                                    field=field + '.coordinates')
    coordinates = _matrix(data['coordinates'], field + '.coordinates')
  elif 'coordinates' in data:
    raise errors.ProblemFileError('only allowed together with cost_rule',
                                  field=field + '.coordinates')
  try:
    return measures.DiscreteMeasure(weights, coordinates)
  except errors.ValidationError as e:
    raise errors.ProblemFileError(str(e), field=field)


def _lambda(data, key, length):
  if key not in data:
    return None
  value = data[key]
  if _is_number(value):
    values = [_number(value, key)] * length
  else:
    values = _numbers(value, key)
    if len(values) != length:
      raise errors.ProblemFileError(
          'has %d entries, expected %d' % (len(values), length), field=key)
  for i, v in enumerate(values):
    if v < 0:
      raise errors.ProblemFileError('must be >= 0', field='%s[%d]' % (key, i))
  return np.array(values)


def _parameters(data):
  data = _object(data, 'parameters', _PARAMETERS)
  values = {}
  for key in sorted(data):
    field = 'parameters.' + key
    if key == 'max_iters':
      value = data[key]
      if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise errors.ProblemFileError('expected a positive integer',
                                      field=field)
      values[key] = value
    else:
      values[key] = _number(data[key], field)
  return SolverParameters(**values)


def parse(data):
  """Validates a decoded problem object and returns a ProblemSpec.

  Raises:
    ProblemFileError: naming the first offending field.
  """
  data = _object(data, '', _TOP_LEVEL)
  if data.get('format') != FORMAT:
    raise errors.ProblemFileError('expected %r' % FORMAT, field='format')
  if ('cost' in data) == ('cost_rule' in data):
    raise errors.ProblemFileError(
        'exactly one of "cost" and "cost_rule" is required',
        field='cost' if 'cost' in data else 'cost_rule')
  rule = data.get('cost_rule')
  if rule is not None and rule not in _COST_RULES:
    raise errors.ProblemFileError(
        'unknown rule %r; expected one of %s' %
        (rule, ', '.join(sorted(_COST_RULES))), field='cost_rule')
  for key in ('source', 'target'):
    if key not in data:
      raise errors.ProblemFileError('missing', field=key)
  p = _measure(data['source'], 'source', rule is not None)
  q = _measure(data['target'], 'target', rule is not None)

  if rule is not None:
    try:
      cost = _COST_RULES[rule](p.labels, q.labels)
    except errors.ValidationError as e:
      raise errors.ProblemFileError(str(e), field='target.coordinates')
  else:
    try:
      cost = measures.CostMatrix(_matrix(data['cost'], 'cost'))
    except errors.ValidationError as e:
      raise errors.ProblemFileError(str(e), field='cost')
    if cost.shape != (len(p), len(q)):
      raise errors.ProblemFileError(
          'is %dx%d, expected %dx%d' % (cost.shape + (len(p), len(q))),
          field='cost')

  if 'solver' not in data:
    raise errors.ProblemFileError('missing', field='solver')
  solver = _solver(data['solver'], 'solver')
  lambda1 = _lambda(data, 'lambda1', len(p))
  lambda2 = _lambda(data, 'lambda2', len(q))
  parameters = _parameters(data.get('parameters', {}))
  needs_lambdas = solver not in _LAMBDA_FREE and not (
      solver == SolverName.ORACLE and parameters.eta is not None)
  if needs_lambdas:
    for key, value in (('lambda1', lambda1), ('lambda2', lambda2)):
      if value is None:
        raise errors.ProblemFileError('missing', field=key)
  penalty1 = _enum(PenaltyKind, data.get('penalty1', 'TV'), 'penalty1')
  penalty2 = _enum(PenaltyKind, data.get('penalty2', 'TV'), 'penalty2')
  return ProblemSpec(solver, cost, p, q, lambda1, lambda2, penalty1, penalty2,
                     parameters)


def loads(text):
  """Parses problem-file text.

  Raises:
    ProblemFileError: with line/column for JSON syntax errors and a field
      path for everything else.
  """
  try:
    data = json.loads(text)
  except json.JSONDecodeError as e:
    raise errors.ProblemFileError(e.msg, line=e.lineno, column=e.colno)
  return parse(data)


def load(path):
  with open(path) as f:
    return loads(f.read())


def _floats(values):
  return [float(v) for v in np.asarray(values).ravel()]


def problem_dict(spec):
  """Inverse of parse, with an explicit cost matrix and vector lambdas."""
  data = {
      'format': FORMAT,
      'source': {'weights': _floats(spec.p.weights)},
      'target': {'weights': _floats(spec.q.weights)},
      'cost': [_floats(row) for row in spec.cost.entries],
      'penalty1': spec.penalty1.name,
      'penalty2': spec.penalty2.name,
      'solver': spec.solver.flag,
  }
  if spec.lambda1 is not None:
    data['lambda1'] = _floats(spec.lambda1)
  if spec.lambda2 is not None:
    data['lambda2'] = _floats(spec.lambda2)
  parameters = {k: v for k, v in dataclasses.asdict(spec.parameters).items()
                if v is not None}
  if parameters:
    data['parameters'] = parameters
  return data


def _optional(value):
  return None if value is None else float(value)


def report_dict(report, p, q):
  """Machine-readable form of a SolveReport against measures p and q."""
  plan = report.plan
  return {
      'format': REPORT_FORMAT,
      'solver': report.solver,
      'objective': report.objective._asdict(),
      'primal_value': float(report.primal_value),
      'dual_value': _optional(report.dual_value),
      'gap': _optional(report.gap),
      'iterations': int(report.iterations),
      'converged': bool(report.converged),
      'shape': list(plan.shape),
      'plan': [[i, j, mass]
               for i, j, mass in plan.triplets(TRIPLET_THRESHOLD)],
      'marginal_residuals': {
          'source': _floats(plan.row_marginal - np.asarray(p)),
          'target': _floats(plan.col_marginal - np.asarray(q)),
      },
  }


def _strict(data):
  if isinstance(data, dict):
    return {k: _strict(v) for k, v in data.items()}
  if isinstance(data, (list, tuple)):
    return [_strict(v) for v in data]
  if isinstance(data, float) and not math.isfinite(data):
    return repr(float(data))
  return data


def dumps(data):
  return json.dumps(_strict(data), sort_keys=True, indent=2,
                    allow_nan=False) + '\n'


def dump_report(report, p, q, stream):
  stream.write(dumps(report_dict(report, p, q)))


def load_plan_triplets(report):
  """TransportPlan from a report dict or its JSON text."""
  if isinstance(report, str):
    report = json.loads(report)
  return measures.TransportPlan.from_triplets(report['plan'],
                                              tuple(report['shape']))


__all__ = ['FORMAT', 'SolverParameters', 'ProblemSpec', 'parse', 'loads',
           'load', 'problem_dict', 'report_dict', 'dumps', 'dump_report',
           'load_plan_triplets']
