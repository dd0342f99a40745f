"""Situated 3D change toolkit: scan-pair data model, situation and QA generation,
evaluation metrics, prompt gateway, and the comparison projector reference kernel."""

__version__ = "0.1.0"
