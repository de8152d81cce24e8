"""Configuration-space Faddeev solver for neutron-deuteron scattering with s-wave Malfliet-Tjon forces."""

__version__ = "0.1.0"
