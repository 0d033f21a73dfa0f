import os

from setuptools import find_packages, setup

cwd = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(cwd, "README.md"), encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="embclust",
    python_requires=">=3.10",
    version="0.1.0",
    description=(
        "Cluster data by autoencoding it, re-embedding the codes with a manifold learner "
        "and fitting a shallow clusterer."
    ),
    keywords=["clustering, autoencoder, umap, t-sne, isomap, gaussian mixture"],
    long_description_content_type="text/markdown",
    long_description=long_description,
    license="GPL 3.0",
    packages=find_packages(exclude=("tests",)),
    include_package_data=True,
    install_requires=(
        "matplotlib >= 3.6",
        "numba >= 0.57",
        "numpy >= 1.24",
        "pandas >= 1.5",
        "pynndescent >= 0.5.10",
        "scikit_learn >= 1.2",
        "scipy >= 1.10",
        "setuptools >= 57.0.0",
        "tomli >= 1.1.0; python_version < '3.11'",
        "torch >= 2.3",
    ),
    extras_require={"dev": ["black", "flake8", "isort", "wheel", "pytest"]},
    entry_points={"console_scripts": ["embclust=embclust.cli:parse_args"]},
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Programming Language :: Python :: 3',
    ]
)
