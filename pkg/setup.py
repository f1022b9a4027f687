################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from setuptools import setup

setup(
  name = 'fittsground',
  packages = ['fittsground',
              'fittsground.data',
              'fittsground.geom',
              'fittsground.labels',
              'fittsground.nn',
              'fittsground.stats'],
  version = '0.1.dev0',
  license='MIT',
  description = 'Coordinate-free GUI grounding with suppression attention and Fitts-Gaussian patch labels',
  keywords = ['GUI Grounding', 'Attention Supervision', 'Gaussian Heatmap Labels'],
  python_requires='>=3.9',
  install_requires=[
          'jax>=0.4.25',
          'jaxlib>=0.4.25',
          'dm-haiku',
          'optax',
          'numpy',
          'Pillow',
          'tqdm'
      ],
  extras_require = {'test': ['pytest']},
  entry_points = {'console_scripts': ['fittsground = fittsground.cli:main']},
  classifiers=[
    'Development Status :: 3 - Alpha',
    'Intended Audience :: Science/Research',
    'Topic :: Scientific/Engineering :: Artificial Intelligence',
    'License :: OSI Approved :: MIT License',
    'Programming Language :: Python :: 3.9',
    'Programming Language :: Python :: 3.10',
    'Programming Language :: Python :: 3.11',
    'Programming Language :: Python :: 3.12'
  ],
)
