"""Tabular question answering: natural language in, SQL + chart + insights out."""

__version__ = "0.1.0"
