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

"""Entropy functions, f-divergences and their convex conjugates.

Six entropy functions are supported (EntropyFunctionKind):

  KL         f(s) = s ln s - s + 1       f*(t) = exp(t) - 1
  TV         f(s) = |s - 1|              f*(t) = max(t, -1) for t <= 1
  PTV        f(s) = 1 - s on [0, 1]      f*(t) = max(t, -1)
  EQUALITY   f = indicator of {1}        f*(t) = t
  ZERO       f = 0                       f*(t) = indicator of {0}
  INTERVAL   f = indicator of [0, 1]     f*(t) = max(t, 0)

Every f is +inf for s < 0 except ZERO.  Values are extended reals: +inf and
-inf are returned in-band, never raised.

The weighted penalties are the marginal terms of a discrete GOPT objective,
and tv_dual_term / ptv_dual_term are the matching terms of its dual.
"""

import math

import numpy as np
from scipy import special

from gopt import errors
from gopt.enums import EntropyFunctionKind

# Band within which a marginal may exceed its measure and still count as
# feasible for the PTV indicator.
MARGINAL_TOL = 1e-9

_RECESSION = {
    EntropyFunctionKind.KL: math.inf,
    EntropyFunctionKind.TV: 1.0,
    EntropyFunctionKind.PTV: math.inf,
    EntropyFunctionKind.EQUALITY: math.inf,
    EntropyFunctionKind.ZERO: 0.0,
    EntropyFunctionKind.INTERVAL: math.inf,
}


def _entropy_array(kind, s):
  s = np.asarray(s, dtype=float)
  out = np.full(s.shape, math.inf)
  if kind == EntropyFunctionKind.KL:
    pos = s > 0
    out[pos] = special.xlogy(s[pos], s[pos]) - s[pos] + 1.0
    out[s == 0] = 1.0
  elif kind == EntropyFunctionKind.TV:
    dom = s >= 0
    out[dom] = np.abs(s[dom] - 1.0)
  elif kind == EntropyFunctionKind.PTV:
    dom = (s >= 0) & (s <= 1)
    out[dom] = 1.0 - s[dom]
  elif kind == EntropyFunctionKind.EQUALITY:
    out[s == 1] = 0.0
  elif kind == EntropyFunctionKind.ZERO:
    out[...] = 0.0
  elif kind == EntropyFunctionKind.INTERVAL:
    out[(s >= 0) & (s <= 1)] = 0.0
  return out


def _conjugate_array(kind, t):
  t = np.asarray(t, dtype=float)
  if kind == EntropyFunctionKind.KL:
    with np.errstate(over='ignore'):
      return np.expm1(t)
  if kind == EntropyFunctionKind.TV:
    return np.where(t <= 1, np.maximum(t, -1.0), math.inf)
  if kind == EntropyFunctionKind.PTV:
    return np.maximum(t, -1.0)
  if kind == EntropyFunctionKind.EQUALITY:
    return t.copy()
  if kind == EntropyFunctionKind.ZERO:
    return np.where(t == 0, 0.0, math.inf)
  return np.maximum(t, 0.0)


def _scalar_or_array(values, like):
  if np.ndim(like) == 0:
    return float(values)
  return values


def entropy_value(kind, s):
  """Evaluates the entropy function f of the given kind at s.

  s may be a scalar or an array; the result has the same shape.
  """
  kind = EntropyFunctionKind.from_param(kind)
  return _scalar_or_array(_entropy_array(kind, s), s)


def conjugate_value(kind, s_prime):
  """Evaluates the convex conjugate f* of the given kind at s_prime."""
  kind = EntropyFunctionKind.from_param(kind)
  return _scalar_or_array(_conjugate_array(kind, s_prime), s_prime)


def recession_slope(kind):
  """Growth rate f'(inf) = lim f(s)/s, which prices mass singular to b."""
  return _RECESSION[EntropyFunctionKind.from_param(kind)]


def _same_length(*vectors):
  arrays = [np.asarray(v, dtype=float) for v in vectors]
  shape = arrays[0].shape
  for a in arrays[1:]:
    if a.shape != shape:
      raise errors.ValidationError(
          'length mismatch: %s vs %s' % (shape, a.shape))
  return arrays


def f_divergence(kind, a, b):
  """D_f(a || b) for non-negative vectors a, b.

  The discrete Lebesgue decomposition splits a into the part where b > 0,
  charged sum f(a_i / b_i) b_i, and the singular part where b = 0, charged
  f'(inf) * a_i.  0 * inf is taken as 0.
  """
  kind = EntropyFunctionKind.from_param(kind)
  a, b = _same_length(a, b)
  total = 0.0
  regular = b > 0
  if np.any(regular):
    values = _entropy_array(kind, a[regular] / b[regular])
    if np.any(np.isinf(values)):
      return math.inf
    total += math.fsum(values * b[regular])
  singular_mass = math.fsum(a[~regular])
  if singular_mass > 0:
    total += _RECESSION[kind] * singular_mass
  return total


def kl_divergence(a, b):
  """Generalized KL(a || b) = sum a ln(a/b) - a + b for arrays of any shape."""
  a, b = _same_length(a, b)
  return float(np.sum(special.rel_entr(a, b)) - np.sum(a) + np.sum(b))


def negative_entropy(gamma):
  """Returns sum (ln g - 1) g over the entries of gamma, with 0 ln 0 = 0."""
  gamma = np.asarray(gamma, dtype=float)
  return float(np.sum(special.xlogy(gamma, gamma) - gamma))


def weighted_tv_penalty(lam, a, b):
  """sum_i lam_i |b_i - a_i|."""
  lam, a, b = _same_length(lam, a, b)
  return math.fsum(lam * np.abs(b - a))


def weighted_ptv_penalty(lam, a, b, tol=MARGINAL_TOL):
  """sum_i lam_i (b_i - a_i) when a <= b + tol entrywise, +inf otherwise."""
  lam, a, b = _same_length(lam, a, b)
  if np.any(a > b + tol):
    return math.inf
  return math.fsum(lam * (b - a))


def tv_dual_term(lam, phi, mass, tol=0.0):
  """Dual counterpart of a TV penalty: sum min(lam, phi) mass.

  The conjugate of the TV penalty is finite only for phi >= -lam, so a
  potential below that (beyond tol * (1 + lam)) gives -inf.
  """
  lam, phi, mass = _same_length(lam, phi, mass)
  if np.any(phi < -lam - tol * (1.0 + lam)):
    return -math.inf
  return math.fsum(np.minimum(lam, phi) * mass)


def ptv_dual_term(lam, phi, mass):
  """Dual counterpart of a PTV penalty: sum min(lam, phi) mass."""
  lam, phi, mass = _same_length(lam, phi, mass)
  return math.fsum(np.minimum(lam, phi) * mass)


__all__ = ['MARGINAL_TOL', 'entropy_value', 'conjugate_value',
           'recession_slope', 'f_divergence', 'kl_divergence',
           'negative_entropy', 'weighted_tv_penalty', 'weighted_ptv_penalty',
           'tv_dual_term', 'ptv_dual_term']
