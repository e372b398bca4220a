"""Main configuration file for the figure reproduction commands."""

from .fock_scan import FOCK_SCAN
from .lorentzian_scan import LORENTZIAN_SCAN
from .ohmic_scan import OHMIC_SCAN

FIGURE_SCANS = {
    "figure3": LORENTZIAN_SCAN,
    "figureA1": FOCK_SCAN,
    "figureA2": OHMIC_SCAN,
}
