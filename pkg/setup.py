#!/usr/bin/env python
from setuptools import setup


README = '''gopt - Generalized optimal partial transport.
=============================================

gopt solves partial transport problems between two discrete measures in
which mass may be created or destroyed at a per-atom price.  Each side is
penalized by a weighted total variation (TV) or by a partial total variation
(PTV) that only lets mass be destroyed.

Solvers:
--------

- ``sinkhorn``: entropic regularization, solved by alternating closed-form
  proxdiv updates in the log domain.  Handles every TV/PTV combination.

- ``lp``: exact PTV/PTV solve through an augmented balanced transport
  problem and a transportation simplex.

- ``sopt`` and ``sopt-sinkhorn``: the special case where every unit of the
  smaller measure must be transported.

- ``mopt-lp`` and ``mopt-dykstra``: transport exactly eta units of mass,
  exactly or with entropic regularization.

- ``oracle``: a dense two-phase simplex over the explicit linear program,
  used to certify the others.

Basic Usage
-----------

.. code-block:: python

    import gopt

    cost = gopt.make_cost_sq_euclidean(xs, ys)
    problem = gopt.gopt_problem(cost, p, q, lambda1, lambda2, 'PTV', 'PTV')
    report = gopt.solve_gopt_lp(problem)
    report.plan.matrix, report.primal_value

From the command line::

    gopt solve problem.json --solver sinkhorn --epsilon 0.01
    gopt selftest
'''

CLASSIFIERS = [
    'Development Status :: 4 - Beta',
    'Intended Audience :: Science/Research',
    'License :: OSI Approved :: Apache Software License',
    'Operating System :: OS Independent',
    'Programming Language :: Python',
    'Programming Language :: Python :: 3',
    'Topic :: Scientific/Engineering :: Mathematics',
]

setup(name='gopt',
      version='0.1.0',
      description='Generalized optimal partial transport solvers',
      long_description=README,
      keywords='optimal transport partial transport sinkhorn linear programming',
      license='Apache 2.0',
      classifiers=CLASSIFIERS,
      packages=['gopt'],
      package_dir={'': 'python'},
      python_requires='>=3.8',
      install_requires=['numpy', 'scipy'],
      entry_points={'console_scripts': ['gopt = gopt.cli:main']},
      zip_safe=False)
