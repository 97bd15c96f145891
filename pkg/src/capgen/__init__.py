"""Harness for generating capability ontologies with LLMs and scoring the results."""

__version__ = "0.1.0"
