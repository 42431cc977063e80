"""Feature-targeted perturbation toolkit for evaluating C vulnerability detectors."""

__version__ = "0.1.0"
