"""Exception types shared across the package."""


class CutLgfError(Exception):
    """Base class for all package errors."""


class DegenerateCut(CutLgfError):
    """The interface cuts a cell in an unsupported pattern (0/4 edge crossings,
    vanishing level-set gradient, or multiple connected pieces per cell)."""


class EmptyInterface(CutLgfError):
    """No background cell is crossed by the zero level set."""


class WindowTooSmall(CutLgfError):
    """A requested lattice offset falls outside the precomputed kernel window."""


class IsolatedSource(CutLgfError):
    """A dipole source vertex has no five-point neighbor outside the active set."""


class SingularLayerBlock(CutLgfError):
    """The ring self-interaction block is numerically singular; the
    value-parametrized reduction is not available for this geometry."""


class NoAdmissibleDirection(CutLgfError):
    """An outer vertex has no axis direction with two in-band backward points."""


class CgBreakdown(CutLgfError):
    """Conjugate gradients met a non-positive curvature direction; the operator
    is not SPD (typically a missing gauge term upstream)."""


class LanczosNotConverged(CutLgfError):
    """Lanczos extreme-eigenvalue estimates did not reach the requested accuracy."""


class UnknownSolution(CutLgfError):
    """The requested manufactured solution name is not available."""


class DivergentMode(CutLgfError):
    """The layer symbol is evaluated at the divergent zero-frequency mode."""
