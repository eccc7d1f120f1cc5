"""Exact skein-theoretic and Bar-Natan computations for handle-slide invariance.

Submodules:

* :mod:`skeinslide.coeff`   -- Laurent polynomials, rational functions, series
* :mod:`skeinslide.tl`      -- Temperley-Lieb algebra and Jones-Wenzl projectors
* :mod:`skeinslide.annulus` -- annular skein module and fusion quotients
* :mod:`skeinslide.cob`     -- dotted cobordisms over the disk and the annulus
* :mod:`skeinslide.kom`     -- eventually periodic complexes, P2 and P3
* :mod:`skeinslide.slide`   -- partial traces, tails and equivalence certificates
* :mod:`skeinslide.cli`     -- batch verification driver
"""

__version__ = "0.1.0"
