from setuptools import setup, find_packages

setup(
    name="arlib",
    version="0.1.0",
    packages=find_packages(exclude=["tests*"]),
    package_data={"arlib.structures": ["*.ar"]},
    install_requires=[
        "numpy>=1.26.4",
        "scipy>=1.11",
        "tomli>=1.1; python_version < '3.11'",
    ],
    extras_require={
        "test": ["pytest>=7"],
    },
    entry_points={
        "console_scripts": ["arlib=arlib.cli:main"],
    },
    description="Curvature-dimension disproofs for almost-Riemannian structures",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.10",
)
