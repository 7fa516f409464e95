"""Census of commensurability classes of arithmetic hyperbolic 2- and 3-orbifolds."""

__version__ = "0.1.0"
