"""Device pairing from the timing of power-switch presses on a shared power source."""

from .adversary import GuessingParams, guessing_success_probability, mitm_attempt, passkey_baseline, \
    simulate_peeper
from .crypto import commitment, derive_key, dh, evidence_hash, generate_keypair
from .powerline import DeviceProfile, Distribution, EventTrace, PressSchedule, observe, run_trace, \
    sample_press_schedule
from .protocol import Message, PairingConfig, PairingSession, Phase, Role, run_pairing, start_session
from .timebase import DevicePrecision, common_delay_tolerance, quantize
from .tolerance import accept, agreed_indices, error_rate, evidence_vector, multi_error_rate

__version__ = "0.1.0"
