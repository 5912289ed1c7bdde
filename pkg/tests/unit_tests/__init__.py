"""Unit tests for the Bregman proximal gradient library."""
