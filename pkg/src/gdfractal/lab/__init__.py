"""Documents, experiments, rendering and the command line."""
