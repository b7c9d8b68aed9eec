"""
Tests for aonlab.
"""
