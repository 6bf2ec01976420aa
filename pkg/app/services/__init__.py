# Services for the hedge tenor optimizer
