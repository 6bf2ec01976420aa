# Core module for the hedge tenor optimizer
