#!/usr/bin/env python
# -*- coding: utf-8 -*-

import io
import os

from setuptools import find_packages, setup

NAME = 'mixfem'
DESCRIPTION = 'Robust mixed finite elements (RT/BDM) for diffusion problems with discontinuous coefficients, with a convergence-study CLI.'
AUTHOR = 'mixfem developers'
REQUIRES_PYTHON = '>=3.9'

REQUIRED = [
    "numpy>=1.21.0",
    "scipy>=1.12.0",
    "pandas>=1.1.0",
    "scikit-learn>=0.23.0",
    "pyyaml>=5.4",
    "threadpoolctl>=2.1.0",
]

EXTRAS = {
    "test": ["pytest>=7.0"],
}

here = os.path.abspath(os.path.dirname(__file__))

try:
    with io.open(os.path.join(here, 'README.md'), encoding='utf-8') as f:
        long_description = '\n' + f.read()
except FileNotFoundError:
    long_description = DESCRIPTION

about = {}
with open(os.path.join(here, NAME, '__version__.py')) as f:
    exec(f.read(), about)

setup(
    name=NAME,
    version=about['__version__'],
    description=DESCRIPTION,
    long_description=long_description,
    long_description_content_type='text/markdown',
    author=AUTHOR,
    python_requires=REQUIRES_PYTHON,
    packages=find_packages(exclude=('tests',)),
    py_modules=['study', 'arg_handler'],
    entry_points={
        'console_scripts': ['study=study:main'],
    },
    install_requires=REQUIRED,
    extras_require=EXTRAS,
    license='MIT',
    classifiers=[
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
