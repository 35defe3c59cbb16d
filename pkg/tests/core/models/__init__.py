"""Core models tests package."""