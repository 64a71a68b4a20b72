"""Verification and search tools for weighing matrices and their zero-pattern geometry."""

__version__ = "0.1.0"
