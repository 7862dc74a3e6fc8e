"""Shipped scenarios and their data files."""
