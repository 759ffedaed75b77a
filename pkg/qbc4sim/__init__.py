"""
QBC4 Simulator
==============

State-vector simulator and analyzer for the QBC4 quantum bit-commitment
protocol with:
- Honest N-instance protocol runs with full transcripts
- Concealing analysis (fixed, randomized and purified basis choice)
- Binding analysis (seesaw optimizer, global oracle, baselines, N-round bound)
- Dishonest-Babe attacks and cut-and-choose entanglement checks
"""

from .version import VERSION as __version__
__author__ = "QBC4 Simulator Team"
