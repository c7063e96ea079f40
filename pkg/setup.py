from pathlib import Path
from setuptools import setup, find_packages

ROOT = Path(__file__).parent

try:
    import pypandoc
    README = pypandoc.convert_file(str(ROOT / "README.md"), "rst")
    (ROOT / "README.rst").write_text(README, encoding="utf-8")
    long_description_content_type = "text/x-rst"
except (ImportError, OSError):
    README = (ROOT / "README.md").read_text(encoding="utf-8")
    long_description_content_type = "text/markdown"

setup(
    name="tips_profiles",
    version="0.3.0",
    description="Bus-access segment profiles and interference-aware schedules from annotated CFGs",
    long_description=README,
    long_description_content_type=long_description_content_type,
    license="MIT",
    packages=find_packages(exclude=("tests", "tests.*")),
    include_package_data=True,           # include py.typed
    package_data={"tips_profiles": ["py.typed"]},
    python_requires=">=3.9",
    install_requires=[
        "pydantic>=1.8,<3.0.0",
        "packaging",  # Used for version parsing in pydantic_compat
        "networkx>=2.6",
        "svgwrite>=1.4",
    ],
    extras_require={
        "dev": ["black", "ruff", "pytest", "pytest-asyncio"],
    },
    entry_points={
        "console_scripts": ["tips-profiles = tips_profiles.cli:main"],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Framework :: AsyncIO",
        "Topic :: Software Development :: Embedded Systems",
        "Typing :: Typed",
    ],
    keywords=[
        "wcet",
        "multicore",
        "interference",
        "real-time",
        "pydantic",
    ],
)
