"""Mobiliscope: desk-scale urban mobility analytics.

Synthetic sensor traces are classified into transportation modes via
windowed majority estimation and transit geofencing, privacy-sanitized,
ingested into an append-only store, and served as analytics (modal split,
OD matrices, usual routes, carbon footprint) over an HTTP API.
"""

__version__ = "0.1.0"
