"""
RFID Missing-Tag Identification Simulator
=========================================
Simulates string-based missing-tag identification between an RFID reader
and a population of tags: SSMTI (unique-value arrangement followed by
string verification) and ISMTI (round-by-round expected/actual vector
comparison with online missing-rate estimation), over a bit-tracking
channel with optional detection errors and capture effect.

Also includes the timing and efficiency models with load-factor
optimization, an EDFSA ID-collection baseline, and a repeated-trial
harness that writes CSV results.
"""

__version__ = "1.0.0"
