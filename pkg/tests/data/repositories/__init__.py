"""Repository tests package."""