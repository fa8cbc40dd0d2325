"""
Setup file for Fourier Series INR
Fourier-mapped perceptrons and MLPs that fit images as truncated Fourier series.
"""
from setuptools import setup


def read_long_description():
    """Read the long description from README.md."""
    with open("README.md", "r", encoding="utf-8") as fh:
        return fh.read()


# Read the requirements from requirements.txt
def read_requirements():
    """Read requirements from requirements.txt."""
    with open("requirements.txt", "r", encoding="utf-8") as fh:
        requirements = []
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                requirements.append(line)
        return requirements


setup(
    name="fourier-series-inr",
    version="1.0.0",
    author="Community",
    author_email="fourier-series-inr@example.com",
    description="Fourier-mapped perceptrons and MLPs for fitting images as truncated Fourier series",
    long_description=read_long_description(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Image Processing",
    ],
    py_modules=[
        "ExperimentConfig",
        "FourierLattice",
        "FourierEmbedding",
        "SpectralInit",
        "FourierNetwork",
        "FourierTrainer",
        "FrequencyPruning",
        "ImageGrid",
        "FourierSeriesINR",
    ],
    python_requires=">=3.8",
    install_requires=read_requirements(),
    entry_points={
        "console_scripts": [
            "fourier-inr=FourierSeriesINR:main",
        ],
    },
    package_data={
        "": ["*.json", "*.md", "*.sh"],
    },
    include_package_data=True,
    keywords="fourier series, implicit neural representation, coordinate network, siren, image fitting",
    license="MIT",
)
