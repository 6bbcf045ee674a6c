"""Exception types raised across the package."""


class AnnulusError(Exception):
    """Base class for all errors raised by annulus_euler."""


class ValidationError(AnnulusError, ValueError):
    """Invalid input: bad counts, non-finite values, points outside the annulus."""


class GridMismatch(ValidationError):
    """Two fields live on different grids."""


class ConstraintViolation(AnnulusError):
    """A construction constraint failed. ``constraint`` names which one."""

    def __init__(self, constraint: str, message: str):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


class Unsolvable(AnnulusError):
    """Boundary data violates the solvability condition of the moment equation."""

    def __init__(self, residual: float, data_norm: float):
        super().__init__(
            f"least-squares residual {residual:.3e} exceeds 1e-6 * |data| = {1e-6 * data_norm:.3e}"
        )
        self.residual = residual
        self.data_norm = data_norm


class CFLViolation(AnnulusError):
    """Time step too large for the grid and velocity bound."""


class MarkerEscape(AnnulusError):
    """A Lagrangian marker left the annulus beyond tolerance."""

    def __init__(self, index: int, radius: float):
        super().__init__(f"marker {index} escaped the annulus (|x| = {radius:.12g})")
        self.index = index
        self.radius = radius


class RefinementExplosion(AnnulusError):
    """Material-line refinement exceeded the configured marker cap."""


class SimulationDiverged(AnnulusError):
    """NaN or Inf appeared in the vorticity field."""
