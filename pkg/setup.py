# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""goal_coverage setup settings"""

from setuptools import setup, find_packages

setup(
    name="goal_coverage",
    description="Policy mixtures for dense and diverse goal coverage on discrete and toy continuous MDPs",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    include_package_data=True,
    version="0.1.0",
    python_requires=">=3.9",
    entry_points={"console_scripts": ["goal-coverage = goal_coverage.cli:main"]},
    install_requires=["numpy>=1.22", "scipy>=1.8", "pandas>=1.5", "toml", "pluggy>=1.0"],
    extras_require={"test": ["pytest", "allure-pytest"]},
    classifiers=["Topic :: Scientific/Engineering :: Artificial Intelligence"],
)
