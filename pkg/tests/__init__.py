"""Tests for tvlinearity."""
