"""bogs - pseudospectral experiments for the Benjamin-Ono family."""

__version__ = '0.1.0'
