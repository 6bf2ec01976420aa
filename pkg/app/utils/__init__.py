# Utility functions for the hedge tenor optimizer
