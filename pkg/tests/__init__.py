"""Tests for the Bregman proximal gradient library."""
