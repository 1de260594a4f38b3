"""ruinlab - Ruin Probability and Optimal Investment Toolkit"""
__version__ = "1.0.0"
