"""voxfp: a three-level toolkit for diffusion with volume exclusion.

Levels:
  * particles -- Brownian dynamics of N interacting particles (soft forces or
    hard-sphere contact projection);
  * fv        -- finite-volume solver for the macroscopic nonlinear
    Fokker-Planck equation with the excluded-volume coefficient;
  * jko       -- 1D minimizing-movement (JKO) solver in quantile coordinates.

Supporting modules: core (grids, fields, RNG streams, config/CSV I/O),
potentials (external V, interaction u, alpha_u quadrature), analysis
(relative-entropy curves and decay-rate fits).
"""

__version__ = "1.0.0"
