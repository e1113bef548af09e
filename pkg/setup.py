""" Setup script for the labelled quantitative control improvisation toolkit.
"""

from setuptools import setup

__author__ = "LQCI developers"
__copyright__ = "LQCI developers"
__licence__ = "MIT Licence"
__maintainer__ = "LQCI developers"
__url__ = "https://github.com/lqci/lqci-toolkit"

version = "0.1.0"

if __name__ == "__main__":
    setup(
        name="lqci-toolkit",
        version=version,
        author=__author__,
        maintainer=__maintainer__,
        url=__url__,
        description="Labelled quantitative control improvisation",
        long_description=(
            "Builds randomized generators of words that satisfy a hard constraint, "
            "respect bounds on word and label probabilities and keep the expected "
            "cost under a bound. Exact, approximate and maximum-entropy schemes."
        ),
        license=__licence__,
        packages=["lqci"],
        package_dir={"": "src"},
        python_requires=">=3.9",
        install_requires=["numpy", "scipy", "pandas", "pycosat"],
        entry_points={"console_scripts": ["lqci = lqci.cli:main"]},
        classifiers=[
            "Programming Language :: Python :: 3",
            "License :: OSI Approved :: MIT License",
            "Operating System :: OS Independent",
        ],
        zip_safe=False,
    )
