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

"""Small enumerations shared by the solvers.

Each enum lists its constant names in _values_; the metaclass turns every
name into a class attribute holding a singleton instance, so comparisons like
`problem.penalty1 == PenaltyKind.PTV` work and `repr` gives back the name.
from_param accepts an instance, an index or a (case-insensitive) name, which
is what the problem-file reader needs.
"""


class EnumMetaclass(type):
  def __new__(metaclass, name, bases, cls_dict):
    cls = type.__new__(metaclass, name, bases, cls_dict)
    if name == 'Enum':
      return cls
    try:
      values = cls_dict['_values_']
      members = [cls(i) for i in range(len(values))]
    except KeyError:
      raise ValueError('No _values_ list found inside enum type.')
    except TypeError:
      raise ValueError('_values_ must be a list of names of enum constants.')
    for value, member in zip(values, members):
      type.__setattr__(cls, value, member)
    type.__setattr__(cls, '_members_', tuple(members))
    return cls

  def __iter__(cls):
    return iter(cls._members_)

  def __len__(cls):
    return len(cls._members_)


class Enum(metaclass=EnumMetaclass):
  __slots__ = ('value',)

  _values_ = []

  def __init__(self, value):
    object.__setattr__(self, 'value', value)

  @classmethod
  def from_param(cls, param):
    if isinstance(param, Enum):
      if param.__class__ != cls:
        raise ValueError("Can't mix enums of different types")
      return param
    if isinstance(param, str):
      key = param.strip().upper().replace('-', '_')
      if key not in cls._values_:
        raise ValueError('%r is not a member of enum type %s; expected one of %s.'
                         % (param, cls.__name__, ', '.join(cls._values_)))
      return getattr(cls, key)
    if param < 0 or param >= len(cls._values_):
      raise ValueError('%d is out of range for enum type %s; max %d.' %
                       (param, cls.__name__, len(cls._values_) - 1))
    return cls._members_[param]

  @property
  def name(self):
    return self._values_[self.value]

  def __setattr__(self, name, value):
    raise AttributeError('%s constants are immutable' % type(self).__name__)

  def __eq__(self, other):
    return type(self) is type(other) and self.value == other.value

  def __ne__(self, other):
    return not self == other

  def __hash__(self):
    return hash((type(self).__name__, self.value))

  def __reduce__(self):
    return (type(self).from_param, (self.value,))

  def __repr__(self):
    try:
      return self._values_[self.value]
    except IndexError:
      raise IndexError('Value %d is out of range for %r' %
                       (self.value, self._values_))

  __str__ = __repr__


class PenaltyKind(Enum):
  """Marginal penalty attached to one side of a GOPT problem.

  TV charges lambda per unit of marginal discrepancy in either direction, so
  a plan may move more mass than a measure holds.  PTV charges lambda per
  unit of deficit and forbids exceeding the measure.
  """
  _values_ = ['TV', 'PTV']


class EntropyFunctionKind(Enum):
  _values_ = ['KL', 'TV', 'PTV', 'EQUALITY', 'ZERO', 'INTERVAL']


class SolverName(Enum):
  _values_ = ['SINKHORN', 'LP', 'MOPT_LP', 'MOPT_DYKSTRA', 'SOPT',
              'SOPT_SINKHORN', 'ORACLE']

  @property
  def flag(self):
    """Spelling used on the command line and in files, e.g. 'mopt-lp'."""
    return self.name.lower().replace('_', '-')


__all__ = ['Enum', 'PenaltyKind', 'EntropyFunctionKind', 'SolverName']
