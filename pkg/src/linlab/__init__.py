"""Numerical Poincaré linearizers of polynomials: extended-range evaluation,
growth of the maximum modulus, separating continua, fast-escaping renders
and spider's-web checks."""
from .extrange import (ZERO, LogPolarComplex, TowerMagnitude, lp_add, poly_eval_lp,
                       tower_compare)
from .growth import (GrowthRecord, HolderFit, OrderEstimate, RadiiReport, growth_bracket_check,
                     growth_ratio_check, holder_bounds_fit, iterated_max_modulus, max_modulus,
                     min_modulus_continuum, order_estimate, pullback_continuum, radii_sequence,
                     valiron_order)
from .linearizer import (ExtendedEvaluation, PoincareLinearizer, eval_large, koenigs_eval,
                         local_inverse, omitted_values_check, residual, select_fixed_point)
from .maps import (FixedPointData, OracleLinearizer, PolynomialMap, QRPowerMap,
                   exceptional_values, find_fixed_points, oracle_eval, periodic_points,
                   qr_power_eval)
from .websets import (EscapeVerdict, PixelGrid, PitsReport, WebReport, fast_escape_classify,
                      julia_boundary_render, pits_effect_witness, render_fast_escaping,
                      spiders_web_verify)

__all__ = [name for name in dir() if not name.startswith("_")]
