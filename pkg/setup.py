from setuptools import setup, find_packages

install_requires = ['torch>=1.11', 'scipy', 'numpy', 'pydantic>=2']
tests_require = ['pytest', 'pytest-cov']

setup(
    name='torch_witness',
    version='0.1.0',
    description=('Entanglement lower bounds for lattice bosons from '
                 'time-of-flight absorption images'),
    keywords=['pytorch', 'entanglement', 'cold-atoms', 'bose-hubbard',
              'optical-lattice', 'time-of-flight'],
    license='MIT',
    python_requires='>=3.8',
    install_requires=install_requires,
    tests_require=tests_require,
    extras_require={'test': tests_require},
    entry_points={
        'console_scripts': ['torch-witness=torch_witness.cli:main'],
    },
    packages=find_packages(exclude=['test', 'benchmark']),
)
