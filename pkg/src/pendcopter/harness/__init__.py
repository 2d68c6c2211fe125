"""Scenarios, metrics, configuration files and the command line."""
