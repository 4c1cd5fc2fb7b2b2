"""
Fractal Lq Toolkit - Utils Package
"""
