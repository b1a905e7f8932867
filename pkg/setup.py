import setuptools

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setuptools.setup(
    name="spacetime-pspline",
    version="0.1.0",
    description="Tensor-product p-spline smoothing of spatiotemporal well data",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests", "tests.*", "integration_tests", "integration_tests.*"]),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.8",
        "pandas>=1.3",
        "scikit-learn>=1.0",
        "marshmallow>=3.26.0",
        "psutil",
    ],
    extras_require={
        "dev": [
            "pytest>=7.3.1",
            "pytest-mock>=3.10.0",
            "pytest-cov>=4.0.0",
            "black>=23.3.0",
            "isort>=5.12.0",
            "flake8>=6.0.0",
            "mypy>=1.3.0",
        ],
    },
    package_data={"spacetime_pspline": ["data/*.csv"]},
    include_package_data=True,
    entry_points={
        "console_scripts": [
            "spacetime-pspline=spacetime_pspline.cli:main",
        ],
    },
)
