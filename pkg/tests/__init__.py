"""Tests for gendisc package."""
