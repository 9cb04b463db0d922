#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Sphinx configuration for the gtbench documentation.

import os
import sys

import sphinx_rtd_theme

# build against the checkout, not an installed copy
sys.path.insert(0, os.path.dirname(os.getcwd()))

import gtbench

# -- General configuration ---------------------------------------------

extensions = ['sphinx_rtd_theme', 'sphinx.ext.autodoc',
              'sphinx.ext.viewcode', 'sphinx_copybutton']

source_suffix = '.rst'
master_doc = 'index'

project = u'gtbench'
copyright = u"2026, gtbench developers"

version = gtbench.__version__
release = gtbench.__version__

exclude_patterns = ['_build']

pygments_style = 'sphinx'

autodoc_member_order = 'bysource'

# -- Options for HTML output -------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
htmlhelp_basename = 'gtbenchdoc'

# -- Options for LaTeX, manual page and Texinfo output -----------------

latex_documents = [
    ('index', 'gtbench.tex', u'gtbench Documentation',
     u'gtbench developers', 'manual'),
]

man_pages = [
    ('index', 'gtbench', u'gtbench Documentation',
     [u'gtbench developers'], 1)
]

texinfo_documents = [
    ('index', 'gtbench', u'gtbench Documentation', u'gtbench developers',
     'gtbench', 'Graph Transformer variants and benchmark harness',
     'Miscellaneous'),
]
