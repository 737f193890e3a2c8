"""Exception hierarchy shared by all asg modules.

Exit-code mapping for the CLI lives in ``asg.cli``; library code only raises.
"""


class AsgError(Exception):
    """Base class for all errors raised by asg."""


class EmptyMesh(AsgError):
    """Mesh has no triangles (or no vertices)."""


class ResolutionTooCoarse(AsgError):
    """A voxelized part produced fewer than the minimum occupied cells."""


class ResolutionMismatch(AsgError):
    """Two grids do not share a resolution (or a common lattice)."""


class InterpenetratingParts(AsgError):
    """Assembled parts overlap in voxel space; poses are inconsistent."""


class DegenerateRing(AsgError):
    """Ring-shaped part has zero radial extent about its axis."""


class NoFeasibleScale(AsgError):
    """The radial-scaling schedule found no factor with a free direction."""


class MissingTipAnnotation(AsgError):
    """A string-like part has no rigid-tip annotation in the manifest."""


class ConfigInvalid(AsgError):
    """GA configuration failed validation."""


class BundleCorrupt(AsgError):
    """Matrix bundle (or other artifact) failed schema validation."""


class EtaMismatch(AsgError):
    """Sequence file and matrix bundle disagree on the part count."""


class TooLarge(AsgError):
    """Exhaustive enumeration would exceed the configured budget."""


class BadReference(AsgError):
    """Hypervolume reference point is not dominated by the whole front."""


class MissingArtifacts(AsgError):
    """Report command could not find the run artifacts it needs."""


class ManifestError(AsgError):
    """Assembly manifest is malformed or references missing files."""
