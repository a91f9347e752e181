"""Exception types shared across the package."""

from __future__ import annotations


class GraphParseError(ValueError):
    """An input file could not be parsed; the message names file and line."""


class NumericInstabilityError(RuntimeError):
    """An iterative solve produced, or was about to produce, non-finite values.

    Attributes locate the failure: ``iteration`` is the outer-iteration index
    of the transport solve, ``pair`` the (1-based) modality pair being solved,
    ``epoch`` the 1-based pipeline epoch, and ``lam`` the regularization weight
    in effect when the blow-up happened.
    """

    def __init__(
        self,
        message: str,
        *,
        iteration: int | None = None,
        pair: tuple[int, int] | None = None,
        epoch: int | None = None,
        lam: float | None = None,
    ) -> None:
        super().__init__(message)
        self.iteration = iteration
        self.pair = pair
        self.epoch = epoch
        self.lam = lam

    def __str__(self) -> str:  # noqa: D105
        base = super().__str__()
        ctx = []
        if self.epoch is not None:
            ctx.append(f"epoch {self.epoch}")
        if self.pair is not None:
            ctx.append(f"modality pair {self.pair}")
        if self.iteration is not None:
            ctx.append(f"outer iteration {self.iteration}")
        if self.lam is not None:
            ctx.append(f"lambda={self.lam}")
        return base + (" [" + ", ".join(ctx) + "]" if ctx else "")


class InternalConsistencyError(RuntimeError):
    """An algebraic identity that must hold by construction was violated."""
