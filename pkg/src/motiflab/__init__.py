"""motiflab: a desk-scale laboratory for motion-weighted text-image-to-video
diffusion training, with synthetic videos, exact flow oracles, automatic
evaluation, and an A/B annotation service."""

__version__ = "0.1.0"
