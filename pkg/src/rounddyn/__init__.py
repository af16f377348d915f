"""Round-off and variational chaos indicators for discrete-time maps."""

__version__ = "0.1.0"

from .precision import (DOUBLE, EXTENDED113, SINGLE, PrecisionSpec,
                        RangeOverflowError, machine_epsilon, round_nearest,
                        rounded_eval, spec_from_name)
from .backends import backend_for
from .maps import (Bernoulli, CircleRotation, Froeschle4D, Map,
                   NotInvertibleError, SkewMap, StandardMap, TorusTranslation,
                   forward, forward_with_tangent, inverse, jacobian, make_map)
from .indicators import (ErrorSeries, IndicatorSeries, NormSpec,
                         global_error_translation, megno, mlce,
                         orbit_divergence, reversibility_error, sali)
from .ensemble import (EnsembleSpec, Noise, PerturbationMode, PowerLawFit,
                       Roundoff, VarianceSeries, fit_power_law, run_ensemble)
from .scan import (AxisSpec, GridSpec, ScanResult, SectionProfile,
                   extract_section, grid_scan, read_scan, write_outputs)
