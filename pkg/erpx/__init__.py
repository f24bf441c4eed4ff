"""
erpx - Ensemble of Regression Phalanxes.

Partitions features into phalanxes, fits one base regressor (Lasso or a
regression Random Forest) per phalanx and averages their predictions.
"""
__version__ = "0.1.0"
