from setuptools import find_packages, setup

setup(
    name="umbra-anonymity",
    version="0.1.0",
    description="Recipient anonymity analysis of Umbra stealth address payments",
    packages=find_packages(include=["src", "src.*"]),
    python_requires=">=3.9",
    install_requires=[
        "coincurve>=20.0.0",
        "eth-utils>=4.1.1",
        "eth-hash[pycryptodome]>=0.7.0",
        "numpy>=1.26",
        "scipy>=1.11",
        "requests>=2.32",
        "python-dotenv>=1.0",
        "pydantic>=2.8",
        "structlog>=24.4",
    ],
    extras_require={
        "dev": ["pytest>=8.3", "pytest-cov>=5.0", "hypothesis>=6.100", "black>=24.8", "pylint>=3.2"],
    },
    entry_points={"console_scripts": ["umbra-anonymity=src.main:main"]},
)
