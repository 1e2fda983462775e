"""Renormalised energies of harmonic maps with point singularities."""
