"""Test suite for the translates toolkit"""
