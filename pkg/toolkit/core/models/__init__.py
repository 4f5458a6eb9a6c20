"""Data models and errors"""
