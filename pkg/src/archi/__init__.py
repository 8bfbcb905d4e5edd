"""Spectra of periodic Schrödinger operators on Archimedean-tiling quantum graphs."""
from .chardet import (ArityError, CharSystem, ConsistencyError, FeatureError,
                      VerificationReport, bracket, build_matrix, closed_form, determinant,
                      is_flat_band, lu_determinant, prefactor, random_consistent_basis,
                      verify_closed_form)
from .dispersion import (ReducedRelation, ac_membership, reduced_residual,
                         triple_cos_identity, witness_theta)
from .estimators import BandSpectrum, DispersionSurface, HillBasis
from .hill import (EdgeBasis, Method, PreconditionError, SolverConfig, SolverError,
                   half_identities, phi, solve_basis)
from .potentials import (DomainError, Potential, PotentialError, check_even, constant,
                         evaluate, graphene, piecewise_constant, sampled, zero)
from .spectrum import (Band, SpectrumReport, UnionReport, ac_bands, band_functions,
                       point_spectrum, q0_reference_bands, union_check)
from .tiling import Quasimomentum, Tiling

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
