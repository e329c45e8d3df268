# vortexline: LIA/LLIA vortex-filament simulator and diagnostics
__version__ = "0.1.0"
