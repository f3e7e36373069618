"""Passivity and port-Hamiltonian analysis of discrete-time descriptor systems."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .sysmodel import DescriptorSystem, load_system, save_system  # noqa: E402

__all__ = ["DescriptorSystem", "load_system", "save_system", "__version__"]
