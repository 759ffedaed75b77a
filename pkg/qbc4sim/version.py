"""QBC4 Simulator Version"""
VERSION = "1.0.0"
BUILD_DATE = "20261018"
REPORT_SCHEMA = "1.0"

CHANGELOG = """
v1.0.0 (2026-10-18)
===================
- NEW: Honest protocol runs (quantum and classical ancilla modes)
- NEW: Concealing sweep incl. purified basis choice and product-form check
- NEW: Binding analysis: seesaw + L-BFGS-B oracle, baselines, N-round bound
- NEW: Relaxed-opening tradeoff curve and classical-choice cheat
- NEW: Babe attacks with cut-and-choose entanglement checks
"""
