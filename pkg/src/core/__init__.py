"""Numerical core: claims, model, simulation, HJB closed forms and estimators"""
