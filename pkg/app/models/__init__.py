# Models for the hedge tenor optimizer
