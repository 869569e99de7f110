"""Synthesis and verification of linear-optical transfer matrices for qubit gates."""
