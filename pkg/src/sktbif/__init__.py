"""Bifurcation analysis toolkit for the 1D SKT cross-diffusion competition model.

Subpackages cover: homogeneous equilibria and kinetic linearisation
(`model`), mode-by-mode linear stability and neutral curves (`stability`),
Stuart-Landau pitchfork classification (`landau`), Hopf necessity at the
doubly degenerate point (`ddp`), finite-difference discretisation and
pseudo-arclength continuation (`discretize`, `continuation`), implicit time
integration (`timestep`) and a CLI (`cli`).
"""

from .model import (Equilibrium, Linearization, ModelParams, Regime,
                    classify_regime, coexistence_equilibrium, diffusion_matrix,
                    linearize)
from .stability import (CriticalValue, DoublyDegeneratePoint, Mode,
                        ModeQuadratic, critical_d, char_matrix, find_ddp,
                        laplacian_eigenvalue, mode, mode_quadratic,
                        neutral_curve_d12, neutral_curve_d21)
from .landau import (CriticalMode, LandauResult, SecondOrderCorrections,
                     kernel_vectors, landau_at, landau_coefficients,
                     second_order)

__version__ = "0.1.0"
