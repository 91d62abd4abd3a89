"""Desk-scale humanoid motion stack.

Orientation estimation, CPG gait generation, balance feedback, waveform
in-walk kicks, perception post-processing, soccer skills, and a deterministic
reduced-order simulator tying them together.
"""

__version__ = "0.1.0"
