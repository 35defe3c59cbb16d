"""Core tests package."""