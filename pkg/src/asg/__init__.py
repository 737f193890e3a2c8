"""Assembly sequence generation: voxel relation extraction + two-objective GA."""

__version__ = "0.1.0"
