"""Proactive legal-dialogue toolkit: retrieval, topic trees, guided
navigation, dataset construction, and evaluation."""

__version__ = "0.1.0"
