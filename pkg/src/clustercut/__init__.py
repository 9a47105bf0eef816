"""Cluster simulation of quantum circuits by wire and gate cutting."""
