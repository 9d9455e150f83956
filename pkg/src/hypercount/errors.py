"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where a quantity is defined."""


class NoSuchHypergraphError(DomainError):
    """Raised when (r - 1) does not divide s + t - 1, so no connected hypergraph exists."""

    def __init__(self, r, s, t):
        self.r, self.s, self.t = r, s, t
        super().__init__(
            f"no connected {r}-uniform hypergraph has {s} vertices and nullity {t}: "
            f"{r - 1} does not divide s + t - 1 = {s + t - 1}"
        )


class GuardError(RuntimeError):
    """Exhaustive enumeration refused because the search space is too large."""


class ForestError(ValueError):
    """A forest or forest code violates one of its structural invariants.

    ``invariant`` names the violated condition, e.g. ``"acyclic"`` or
    ``"one-root-per-component"``.
    """

    def __init__(self, invariant, detail=""):
        self.invariant = invariant
        msg = f"violated invariant '{invariant}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
