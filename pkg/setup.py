# -*- coding: utf-8 -*-

import setuptools
from setuptools import setup


__version__ = '0.1.0'

slopepat_name = 'SlopePat'
maintainer = 'SlopePat developers'
description = 'A Python library for SLOPE patterns, their limiting distributions and Monte Carlo recovery checks'

with open('README.md') as f:
    long_description = f.read()

with open('LICENSE.txt') as f:
    license_file = f.read()

with open('AUTHORS.txt') as f:
    author_file = f.read()

required_packages = ['numpy>=1.17.0',
                     'scipy>=1.6.0',
                     'joblib>=0.11.0',
                     'PyYAML>=3.12',
                     'colorama>=0.3.7',
                     'retrying',
                     'future']

test_packages = ['pytest>=4.0',
                 'hypothesis>=4.0']


def get_packages():
    return setuptools.find_packages(exclude=['examples', 'examples.*'])


def get_package_data():

    return {'': ['*.md', '*.txt'],
            'slopepat': ['data/*.json']}


def get_console_dict():
    return {'console_scripts': ['slope=slopepat.slopepat:main']}


def setup_package():

    metadata = dict(name=slopepat_name,
                    maintainer=maintainer,
                    description=description,
                    license=license_file,
                    version=__version__,
                    long_description=long_description,
                    author=author_file,
                    packages=get_packages(),
                    package_data=get_package_data(),
                    zip_safe=False,
                    install_requires=required_packages,
                    tests_require=test_packages,
                    extras_require=dict(test=test_packages),
                    entry_points=get_console_dict())

    setup(**metadata)


if __name__ == '__main__':
    setup_package()
