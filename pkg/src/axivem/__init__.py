"""First-order axisymmetric virtual element method for linear elasticity."""
