"""Exception and warning types shared across the package."""


class DomainError(ArithmeticError):
    """A numerical-domain failure: a pole, an imaginary root, or an evaluation
    refused because it would lose all significant digits."""


class RealizabilityWarning(UserWarning):
    """A rotation probability above 1/2 was requested; the chain accepts it but
    no Margolus automaton realises it."""
