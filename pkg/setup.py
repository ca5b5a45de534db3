"""Setup configuration for the boundary-layer separation toolkit."""
from setuptools import setup, find_packages
from pathlib import Path

# Read README for long description
readme_path = Path(__file__).parent / "README.md"
long_description = readme_path.read_text(encoding="utf-8") if readme_path.exists() else ""

setup(
    name="separation-ode",
    version="0.1.0",
    description="Boundary-layer separation ODE, geometric operators and a near-boundary "
                "Navier-Stokes solver on the sphere, hyperbolic plane and Euclidean plane",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests"]),
    py_modules=['separation', 'ode', 'simulate', 'verify', 'sweep'],
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "sympy>=1.12",
        "rich>=13.0.0",
        "python-dotenv>=1.0.0",
        "PyYAML>=6.0",
        "jsonschema>=4.0",
    ],
    extras_require={
        "test": ["pytest>=7.0", "hypothesis>=6.0"],
    },
    python_requires=">=3.9",
    entry_points={
        'console_scripts': [
            'separation=separation:main',
            'separation-ode=ode:main',
            'separation-simulate=simulate:main',
            'separation-verify=verify:main',
            'separation-sweep=sweep:main',
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    include_package_data=True,
)
