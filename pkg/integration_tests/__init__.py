"""
Integration tests package for spacetime-pspline.
"""
