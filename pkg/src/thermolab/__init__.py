"""Toolkit for conducting and analyzing emotion-elicitation thermography
sessions: radiometric decoding, facial region statistics, the three-phase
acquisition protocol, trend tables, and learning-bundle export."""

__version__ = "0.1.0"
