"""torscat: numerics for the delta-perturbed Laplacian on the square torus.

Modules:
    arith     sums of two squares, r2, omega1, Gaussian angles, w_k
    spectral  weak/strong secular equations and the interlacing spectrum
    greens    Green's-function coefficients and phase-space matrix elements
    ergostat  counting, pair correlation, moments, filters, decay reports
    cache     binary sieve cache format
    cli       command-line front end
"""

__version__ = "0.1.0"
