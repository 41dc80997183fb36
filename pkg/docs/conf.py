# Sphinx configuration for the tclnet documentation.
import os
import re

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "..", "tclnet", "__init__.py")) as f:
    release = re.search(r"__version__ = '([^']+)'", f.read()).group(1)
version = ".".join(release.split(".")[:2])

project = 'TCLNet'
copyright = '2026, TCLNet developers'
author = 'TCLNet developers'

extensions = []
templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

if not os.environ.get('READTHEDOCS'):
    html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
