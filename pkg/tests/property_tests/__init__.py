"""Property-based tests for the Bregman proximal gradient library."""
