"""Coded orthogonal-modulation multiple access (COMMA) toolkit.

Achievability bounds for the noisy unsourced A-channel, link-level
simulation of the SIMO fading adder channel with MMV-AMP and matched-filter
detection, the linear-MUD Gaussian-signaling finite-blocklength baseline,
and the spectral-efficiency sweep machinery on top of them.
"""

from comma import (
    achannel,
    awgn_frontend,
    experiments,
    mf_detector,
    mimo_fbl,
    mmv_amp,
    ortho_mod,
)

__all__ = [
    "achannel",
    "awgn_frontend",
    "experiments",
    "mf_detector",
    "mimo_fbl",
    "mmv_amp",
    "ortho_mod",
]

__version__ = "0.1.0"
