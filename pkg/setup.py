#!/usr/bin/env python

from setuptools import setup

with open('README.md') as f:
    long_description = f.read()

setup(name="approval-gsp-toolkit",
      version="0.1.0",
      python_requires=">=3.8.0, <3.13",
      description="Approval-based committee voting: rules, strategyproofness checks, "
                  "ranking reductions and rule synthesis",
      long_description=long_description,
      long_description_content_type='text/markdown',
      classifiers=[
          'License :: OSI Approved :: Apache Software License',
          'Programming Language :: Python :: 3 :: Only',
          'Programming Language :: Python :: 3.8',
          'Programming Language :: Python :: 3.9',
          'Programming Language :: Python :: 3.10',
          'Programming Language :: Python :: 3.11',
          'Programming Language :: Python :: 3.12'
      ],
      install_requires=[
          'pipelinewise-singer-python==1.*',
          'jsonschema>=3.2,<5',
          'simplejson>=3.11',
          'pyarrow>=10.0.1',
          'python-sat>=0.1.7.dev0'
      ],
      extras_require={
          "test": [
              'pylint>=2.10',
              'pytest>=6.2',
              'pytest-cov>=2.12',
              'networkx>=2.6',
          ]
      },
      entry_points="""
          [console_scripts]
          approval-gsp=approval_gsp:main
       """,
      packages=["approval_gsp"],
      package_data={},
      include_package_data=True,
      )
