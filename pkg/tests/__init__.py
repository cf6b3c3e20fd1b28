"""
Test package for Simple Grapher.
"""
