"""twistlab: numerical and exact checks for twisted spectral triples."""

__version__ = "0.1.0"
