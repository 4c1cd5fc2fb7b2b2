"""
Fractal Lq Toolkit - Config Package
"""
