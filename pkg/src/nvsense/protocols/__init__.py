"""Analytic sensing-protocol signals and their exact-evolution references."""
from .deer import (deer_coupling, deer_oracle, deer_rf_spectrum, deer_sequence, deer_signal,
                   deer_system, dressed_matching, rf_flip_probability)
from .nmr import (SampleModel, SmallAngleWarning, controlled_rotation_oracle, dd_nmr_oracle,
                  dd_nmr_signal, dd_projection_exact, dd_rotation_angle, endor_oracle, endor_signal,
                  ensemble_signal, hh_matched_drive, hh_oracle, hh_resonance, hh_transition,
                  lattice_sum, nmr_system, peak_amplitude, two_d_nmr)
from .qdyne import (QdyneRecord, QdyneResult, aliased_frequency, precision_scaling, qdyne_phases,
                    qdyne_record, qdyne_simulate, qdyne_spectrum)
from .spectroscopy import (DriveConfig, correlation_signal, correlation_spectrum, odmr_linewidth,
                           random_orientations, zf_epr, zf_hamiltonian, zf_levels, zf_peak_positions,
                           zf_transitions)
from .weak import (TrackingTrace, gamma_beta, gamma_gamma, measurement_strength, tracking_oracle,
                   weak_measurement)
