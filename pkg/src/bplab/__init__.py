"""bplab: a numerical lab for Boussinesq-Peregrine type dispersive shallow-water systems.

Pseudospectral operators on periodic grids, elliptic solves over variable
bathymetry, the SW/BP/MBP/Burgers evolution laws, explicit Runge-Kutta
integration, energy diagnostics and reproducible experiment scenarios.
"""

__version__ = "0.1.0"
