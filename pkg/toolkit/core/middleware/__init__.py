"""Run logging and error handling"""
