"""Helfrich bending energy of axisymmetric surfaces."""
