"""voxcover: space-aware frame sampling by greedy voxel coverage, spatial-QA
reward scoring, cold-start filtering, and scene-metadata QA generation."""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
