"""Desk-scale laboratory for gradient inversion attacks on federated updates."""
__version__ = '0.1.0'
