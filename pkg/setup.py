from setuptools import setup, find_packages

# Read requirements from requirements.txt file
with open('requirements.txt') as f:
    requirements = [line for line in f.read().splitlines() if line and not line.startswith('pytest')]

setup(
    name="snapslam",
    version="0.1",
    description="Single-snapshot coherent SLAM simulator for distributed MIMO",
    packages=find_packages(exclude=["tests"]),
    package_data={"snapslam": ["defaults.yaml", "scenarios/*.json"]},
    # Use requirements from requirements.txt
    install_requires=requirements,
    extras_require={"test": ["pytest>=8.0"]},
    entry_points={"console_scripts": ["snapslam=snapslam.main:main"]},
    python_requires=">=3.10",
)
