"""Core domain logic for gia-lab."""
# Domain models, events, settings and errors, independent of the numerics and data layers
