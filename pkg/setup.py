from setuptools import setup, find_packages

pkg_vars = dict()
with open('ppm_game/_version.py') as f:
    exec(f.read(), pkg_vars)

with open("README.md") as f:
    readme = f.read()

setup(
    name='ppm-game',
    packages=find_packages(exclude=['tests', 'tests.*']),
    version=pkg_vars["__version__"],
    description='Solver toolkit for the product portfolio management game',
    long_description=readme,
    long_description_content_type="text/markdown",
    python_requires='>=3.8',
    install_requires=['numpy>=1.22'],
    tests_require=['pytest', 'hypothesis', 'scipy', 'coverage'],
    entry_points={
        'console_scripts': ['ppm-game=ppm_game.cli:main'],
    },
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
    ],

)
