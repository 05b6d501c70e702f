"""
anyon-gas: numerical toolkit for two-dimensional anyon gases.

Exchange statistics, few-body spectra and many-body energy functionals:
- Braid-group representations, pair-exchange spectra and fractionality
- Closed-form two-anyon spectra and many-anyon energy bounds
- Statistics gauge fields, circulation and flux attachment checks
- Thomas-Fermi, magnetic TF and Vlasov functionals on radial grids
- Average-field minimizer with vortex detection on a 2D grid
- Polaron toy model of statistics transmutation
- CLI emitting CSV / JSON data for every experiment
"""

__all__ = [
    "braid_stats",
    "spectra_bounds",
    "gauge_transmute",
    "dft",
    "afm",
    "polaron",
    "output",
    "cli",
    "errors",
]
__version__ = "0.1.0"
