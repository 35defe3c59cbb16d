"""Utility tests package."""