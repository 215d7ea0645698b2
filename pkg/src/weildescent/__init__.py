"""Exact Schrodinger and Weil representations over Q_p with cyclotomic values,
the Galois cocycle of the Weil representation, and its constructive splitting."""

from .cyclo import CyclotomicNumber, GaloisElement, tower
from .localfield import AdditiveCharacter, std_character
from .schwartz import SchwartzFunction, atom
from .sympl import SymplecticElement, parse_word

__version__ = "0.1.0"

__all__ = [
    "CyclotomicNumber",
    "GaloisElement",
    "tower",
    "AdditiveCharacter",
    "std_character",
    "SchwartzFunction",
    "atom",
    "SymplecticElement",
    "parse_word",
    "__version__",
]
