"""
Fractal Lq Toolkit - Services Package
"""
