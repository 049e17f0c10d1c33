"""PTT-Sim: pseudo-spectral simulation of the incompressible Phan-Thien-Tanner system."""

__version__ = "0.1.0"
