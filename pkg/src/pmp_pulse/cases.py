"""The two worked transfers: simultaneous excitation (i) and the CZ phase line (ii)."""

from dataclasses import dataclass

from .targets import CZ_LINE, ExcitationTorus, PerTlsTarget
from .quantum import KET0, KET1


@dataclass(frozen=True)
class Case:
    name: str
    target: object
    crossings: int
    sign: int = 1
    reference_T: float = None

    @property
    def parametrization(self):
        return self.target.parametrization


CASES = {
    "i": Case("i", ExcitationTorus(2), crossings=2, sign=1, reference_T=4.875),
    "ii": Case("ii", CZ_LINE, crossings=3, sign=1, reference_T=7.612),
}


def get_case(name):
    try:
        return CASES[name]
    except KeyError:
        raise KeyError(f"unknown case {name!r}; choose from {sorted(CASES)}") from None


def per_tls_example():
    """TLS 1 to |1>, TLS 2 back to |0> (the mixed transfer)."""
    return PerTlsTarget((KET1, KET0))
