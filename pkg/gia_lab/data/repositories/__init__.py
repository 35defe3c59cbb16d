"""Repositories over the results database."""
from .base_repository import BaseRepository
from .search_repository import SearchRepository

__all__ = ['BaseRepository', 'SearchRepository']
