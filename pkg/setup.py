from setuptools import setup


long_description = \
"""pyocrrl is a set of python modules for scoring OCR output: text-centric
rewards (edit distance, formula BLEU, table TEDS), multi-scale visual rewards
for code-rendered images, GRPO utilities and benchmark reports.
"""

setup(name="pyocrrl",
      description=long_description,
      long_description=long_description,
      license='GNU GPL',
      platforms='Windows, Mac OS-X, Linux',
      packages=["pyocrrl", "pyocrrl.corpus", "pyocrrl.tree", "pyocrrl.tests"],
      package_data={"pyocrrl.tests": ["data/*.jsonl"]},
      install_requires=["numpy", "pandas", "scipy", "Pillow", "requests",
                        "Levenshtein"],
      extras_require={"test": ["pytest"]},
      entry_points={"console_scripts": ["pyocrrl=pyocrrl.cli:main"]},
      version="0.1")
