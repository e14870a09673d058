"""Spectral ocean surface, depth velocity and fluid/solid coupling."""

from oceansim.spectra import SpectrumParams, GridConfig, WaveGrid, generate_h0
from oceansim.surface import CascadeSet, SurfaceMaps, generate_maps, height_at
from oceansim.velocity import VelocitySlices, build_slices, velocity_at, velocity_direct

__version__ = "0.1.0"

__all__ = [
    "SpectrumParams",
    "GridConfig",
    "WaveGrid",
    "generate_h0",
    "CascadeSet",
    "SurfaceMaps",
    "generate_maps",
    "height_at",
    "VelocitySlices",
    "build_slices",
    "velocity_at",
    "velocity_direct",
]
