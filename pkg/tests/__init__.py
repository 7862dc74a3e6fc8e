"""Tests for optosense."""
