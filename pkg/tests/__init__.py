"""
Test suite for fishstream
"""
