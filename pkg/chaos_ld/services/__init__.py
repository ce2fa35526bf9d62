"""Numerical services: dynamics, descriptors, datasets and the classifier."""
