"""Topological pressure of DNA sequences, coding density training and equilibrium measures."""
