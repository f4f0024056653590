"""Exception hierarchy shared by every module of the package."""


class AxiHelfrichError(Exception):
    """Base class for all package errors."""


class DegenerateInputError(AxiHelfrichError, ValueError):
    """Input too small or too degenerate to operate on (few samples, zero length)."""


class SingularNodeError(AxiHelfrichError, ValueError):
    """A node with x = 0 sits in the interior of a curve.

    Curvatures are undefined there; decompose the curve with
    :func:`axihelfrich.curve.split_at_axis` first.
    """


class NotApplicableError(AxiHelfrichError, ValueError):
    """Operation requested on a curve of the wrong class (e.g. mirroring a closed curve)."""


class PointOnCurveError(AxiHelfrichError, ValueError):
    """Winding index requested for a point lying on the polyline."""


class CoercivityRangeError(AxiHelfrichError, ValueError):
    """Material parameters outside the range where the coercivity estimate applies."""


class DisjointnessError(AxiHelfrichError, ValueError):
    """Component traces of a system intersect.

    The energy does not depend on the relative position of the components,
    so translating one of them along the z-axis removes the crossing.
    """


class InfeasibleConstraintError(AxiHelfrichError, ValueError):
    """Area/volume targets violate the isoperimetric inequality."""


class SeedingError(AxiHelfrichError, ValueError):
    """A seed family cannot reach the requested reduced volume."""


class CurveParseError(AxiHelfrichError, ValueError):
    """Malformed curve file; ``row`` and ``column`` locate the problem (1-based)."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class GradientCheckError(AxiHelfrichError, RuntimeError):
    """Analytic and finite-difference gradients disagree beyond the allowed tolerance."""
