# HTTP routes for the estimator and sweep service
