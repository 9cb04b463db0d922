#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import re
from setuptools import setup

with open(os.path.join('gtbench', '__init__.py')) as ver_file:
    for line in ver_file:
        if line.startswith('__version__'):
            version = re.sub("'", "", line[line.index("'"):]).strip()

with open('README.rst') as readme_file:
    readme = readme_file.read()

with open('HISTORY.rst') as history_file:
    history = history_file.read()

requirements = [
    'numpy',
    'ndex2',
    'tqdm'
]

setup(
    name='gtbench',
    version=version,
    description="Graph Transformer variants and a benchmark harness for "
                "synthetic graph tasks",
    long_description=readme + '\n\n' + history,
    author="gtbench developers",
    author_email='gtbench-dev@users.noreply.github.com',
    packages=[
        'gtbench',
    ],
    package_dir={'gtbench':
                 'gtbench'},
    include_package_data=True,
    install_requires=requirements,
    entry_points={
        'console_scripts': [
            'gtbench=gtbench.cli:main',
        ],
    },
    license="BSD license",
    zip_safe=False,
    keywords='gtbench graph transformer benchmark',
    python_requires='>=3.8',
    classifiers=[
        'Development Status :: 2 - Pre-Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Natural Language :: English',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ]
)
