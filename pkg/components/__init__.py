"""
Fractal Lq Toolkit - Components Package
"""
