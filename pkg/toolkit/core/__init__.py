"""Core package for the spectral toolkit"""
