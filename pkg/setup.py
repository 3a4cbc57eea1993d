#!/usr/bin/env python
# -*- coding: utf-8 -*-

import ast
import re


try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup

readme = open('README.md').read()

_version_re = re.compile(r'__version__\s+=\s+(.*)')

with open('entrolab/version.py', 'rb') as f:
    version = str(ast.literal_eval(_version_re.search(
        f.read().decode('utf-8')).group(1)))

requirements = [
    'numpy',
    'scipy',
    'PyYaml',
    'jsonschema',
    'argcomplete',
]

setup(
    name='entrolab',
    version=version,
    description='Relative entropy production experiments for Fokker-Planck, Langevin '
                'and Lindblad dynamics from the command line.',
    long_description=readme,
    long_description_content_type='text/markdown',
    packages=['entrolab', 'entrolab.config', 'entrolab.commands'],
    package_data={
        'entrolab.config': ['*.schema'],
        'entrolab': ['scenarios/*.yaml'],
    },
    include_package_data=True,
    install_requires=requirements,
    license='GPL3',
    zip_safe=False,
    keywords='fokker-planck relative-entropy lindblad langevin feedback-control',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
        'Natural Language :: English',
        'Topic :: Scientific/Engineering :: Physics',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
    ],
    entry_points={
        'console_scripts': [
            'entrolab = entrolab:main',
        ],
    }
)
