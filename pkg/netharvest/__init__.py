"""Optimal and strategic extraction of a renewable resource on a migration network."""
