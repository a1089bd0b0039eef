from __future__ import annotations

# Sphinx configuration for the digitwin-structural API docs.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

project = "digitwin-structural"
copyright = "2025, Abdulhaq Emhemmed"
author = "Abdulhaq Emhemmed"

extensions = [
    "sphinx.ext.intersphinx",
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx_copybutton",
    "sphinx_design",
]

exclude_patterns = ["_build"]

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
}

napoleon_google_docstring = True
napoleon_use_admonition_for_examples = True
napoleon_attr_annotations = True

autoclass_content = "class"
autodoc_class_signature = "separated"
autodoc_member_order = "bysource"
autodoc_default_options = {
    "show-inheritance": True,
    "members": True,
}
autodoc_typehints_format = "short"

html_theme = "furo"
