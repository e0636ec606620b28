"""Prime-factor statistics along Beatty sequences and generalised polynomials."""

from .errors import (
    AmbiguousFloorError,
    BudgetError,
    CounterexampleError,
    EklabError,
    ParseError,
    PrecisionError,
    ValidationError,
)
from .reals import BeattySpec, CertifiedReal, beatty_floor, parse_real
from .arith import FactorTable, omega_range, sieve_primes

__version__ = "0.1.0"
