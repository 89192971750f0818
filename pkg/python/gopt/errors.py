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

"""Exceptions raised by the gopt solvers.

Everything derives from Error, so callers can catch the whole family with a
single except clause.  Input problems are ValueErrors as well, which keeps
the usual Python idiom working for callers that do not know about gopt.
"""


class Error(Exception):
  """Base class for all gopt errors."""


class ValidationError(Error, ValueError):
  """A measure, cost, penalty field or parameter is malformed."""


class SolverRejection(Error, ValueError):
  """A solver was asked to handle a problem outside its scope.

  The message names the solvers that can handle the problem instead.
  """


class LpError(Error):
  """The dense simplex could not produce an optimal vertex."""


class InfeasibleError(LpError):
  """Raised when the linear program has no feasible point."""


class UnboundedError(LpError):
  """Raised when the linear program objective is unbounded below."""


class ProblemFileError(ValidationError):
  """A problem file failed to parse or validate.

  Attributes:
    field: dotted path of the offending field, e.g. 'source.weights[2]', or
      None for syntax errors.
    line, column: position of a JSON syntax error, or None.
  """

  def __init__(self, message, field=None, line=None, column=None):
    self.field = field
    self.line = line
    self.column = column
    if field is not None:
      message = 'field %r: %s' % (field, message)
    elif line is not None:
      message = 'line %d, column %d: %s' % (line, column, message)
    super(ProblemFileError, self).__init__(message)
