"""Delay-interferometer cascade simulation and drift analysis.

The package has two halves. The optics half builds d-dimensional time-bin
and frequency states, propagates them through a radix-2 cascade of delay
interferometers, and runs the same physics at the sampled-waveform level
for classical pulse trains. The analysis half models the environmental
drift that detunes such receivers (thermal transients, temperature-
dependent path shift, laser frequency walk) and recovers those parameters
back out of power traces with nonlinear least-squares fits.
"""

from .errors import (
    CascadeBuildError,
    ConfigError,
    ConvergenceError,
    CsvFormatError,
    DomainError,
    NumericalError,
    PipelineError,
    SaturationError,
    UndefinedCorrelationError,
    UndefinedVisibilityError,
)
from .states import (
    DEFAULT_BIN_WIDTH_S,
    PhotonicState,
    dft_oracle,
    inner_product,
    make_frequency_state,
    make_time_state,
    random_state,
)
from .optics import (
    CascadeSpec,
    InterferometerSpec,
    PortOutcome,
    apply_interferometer,
    build_cascade,
    central_bin_visibility,
    measure_cascade,
    with_phase_offsets,
)
from .waveform import (
    DetectorModel,
    PowerTrace,
    PulseTrainSpec,
    SampledWaveform,
    bin_energies,
    delay_interfere_waveform,
    detect,
    synthesize_frame,
    visibility_from_areas,
    write_power_csv,
)
from .drift import (
    DriftTrace,
    LaserModel,
    PathResponseModel,
    TdpsCurve,
    ThermalModel,
    apparent_path_from_frequency,
    fringe_visibility,
    heater_path_shift,
    laser_frequency_walk,
    output_power,
    path_response,
    read_trace_csv,
    simulate_drift_trace,
    tdps_equilibrium,
    thermal_response,
    write_trace_csv,
)
from .analysis import (
    FitResult,
    TdpsPipelineResult,
    double_exponential_jacobian,
    double_exponential_model,
    exponential_jacobian,
    exponential_model,
    extract_path_from_power,
    fit_double_exponential,
    fit_exponential,
    fit_polynomial,
    pearson_correlation,
    polynomial_slope,
    polynomial_vertex,
    rmse_to_frequency,
    tdps_pipeline,
)

__version__ = "0.1.0"
