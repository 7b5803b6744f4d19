"""LP bounds for sphere packings in commutative spaces."""
__version__ = "0.1.0"
