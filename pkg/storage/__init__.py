"""
Fractal Lq Toolkit - Storage Package
"""
