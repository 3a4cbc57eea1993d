# Configuration file for the Sphinx documentation builder.
#
# This file does only contain a selection of the most common options. For a
# full list see the documentation:
# http://www.sphinx-doc.org/en/master/config

import os
import re

html_baseurl = os.environ.get("READTHEDOCS_CANONICAL_URL", "")

extensions = [
    'sphinx_llms_txt'
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

# -- Project information -----------------------------------------------------

project = 'entrolab'
author = 'entrolab developers'

with open(os.path.join(os.path.dirname(__file__), '..', 'entrolab', 'version.py'),
          encoding='UTF-8') as f:
    version = re.search(r"__version__\s+=\s+'(.*)'", f.read()).group(1)
release = version

language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
todo_include_todos = False

# -- Options for HTML output -------------------------------------------------

import sphinx_rtd_theme  # noqa: E402

html_theme = "sphinx_rtd_theme"
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
htmlhelp_basename = 'entrolabdoc'

# -- Options for manual page output ------------------------------------------

man_pages = [
    (master_doc, 'entrolab', 'entrolab Documentation',
     [author], 1)
]
