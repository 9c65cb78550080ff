from setuptools import setup, find_packages

VERSION = '0.1.0'

requires = [
    "scipy>=1.5",
    "numpy>=1.19"
]

"""
Change Log
0.1.0   2026-10-18 - first release.
                     conditional master equation with Kraus-form and Euler-Maruyama steppers
                     markovian_direct, state_estimate and filtered_current feedback
                     block-reduced ensembles that do not depend on the worker count
                     flat-key scenarios, presets, manifest re-runs; states.mat output
"""

setup(
    name="cqed_feedback",
    version=VERSION,
    license="BSD 3-clause",
    install_requires=requires,
    summary="Quantum-trajectory simulation of two-qubit entanglement under homodyne feedback in circuit QED",
    long_description_content_type='text/markdown',
    long_description=open('README.md').read(),
    packages=find_packages(),
    entry_points={
        'console_scripts': ['cqed_feedback = cqed_feedback.cli:main']
    }
)
