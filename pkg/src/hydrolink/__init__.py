"""Near-field hydrodynamic BPSK link: dipole channel, lateral-line array, beamforming."""

from .errors import (
    ChannelCountMismatch,
    ConfigInvalid,
    DegenerateFingerprint,
    EmptyGrid,
    HydroLinkError,
    LengthMismatch,
    PointInsideSource,
)
from .physics import (
    DipoleSource,
    FluidMedium,
    GridSpec,
    dipole_geometric_factor,
    pressure_at,
    pressure_field_grid,
    source_strength_amplitude,
    velocity_potential,
)
from .modem import (
    BpskConfig,
    actuator_filter,
    coherent_demodulate,
    cycle_per_symbol,
    map_bits,
    modulate,
)
from .array import (
    MultiChannelSignal,
    NoiseModel,
    SensorArray,
    build_dual_line_array,
    calibrate_noise_for_snr,
    per_sensor_snr,
    receive,
    steering_vector,
    synthesize_noise,
)
from .beamformer import array_gain_report, beamform
from .analysis import (
    LinkConfig,
    LinkReport,
    attenuation_profile,
    ber_sweep,
    default_source,
    eye_diagram,
    run_link,
    sensitivity_field,
)

__version__ = "0.1.0"
