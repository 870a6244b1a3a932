# Numerical core of the MVESA line spectral estimator
