"""Configuration utilities"""
