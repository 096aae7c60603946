"""Toolkit for finding near-duplicate video segments across retrieval datasets.

Covers per-second frame-embedding storage, similarity scoring with
black-frame / screensaver suppression, search-curve based overlap
estimation, identity-graph dataset cleaning, weighted multi-dataset
sampling, retrieval metrics and a human assessment service.
"""

__version__ = "0.1.0"
