"""Numerical toolkit for skies bundles over Lorentzian space-times.

Spinor algebra for 4-vectors, the transform of vectors into homogeneous
size fields over the sky, twistor incidence and contraction, conformal
reference frames (graph frame of flat space, geodesic frames onto Cauchy
slices or the cosmological boundary), numerical verification of the
kernel-proportionality and flow-of-time identities, and the sky-image
causal order.
"""

__version__ = "0.1.0"
