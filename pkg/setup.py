from setuptools import setup, find_packages

setup(
    name="gia-lab",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    include_package_data=True,
    package_data={"gia_lab.data": ["migrations/*.py", "migrations/versions/*.py"]},
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "matplotlib>=3.7.0",
        "tqdm>=4.65.0",
        "SQLAlchemy>=2.0.0",
        "alembic>=1.13.0",
        "python-dotenv>=1.0.0",
        "Pillow>=10.0.0",
    ],
    entry_points={
        "console_scripts": [
            "gia-lab=gia_lab.main:main",
        ],
    },
    description="Desk-scale laboratory for gradient inversion attacks on federated learning updates",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Topic :: Security",
    ],
    python_requires=">=3.9",
)
