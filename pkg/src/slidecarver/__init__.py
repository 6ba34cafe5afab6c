"""Tissue segmentation toolkit for multiresolution slide images.

Three segmentation routes over a shared pyramid container: the classical
FESI structure pipeline, a patch-classifier network applied fully
convolutionally, and a valid-convolution U-Net, plus a synthetic slide
generator and a Jaccard evaluation harness.
"""

__version__ = "0.1.0"
