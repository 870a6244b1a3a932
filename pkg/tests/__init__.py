# Test suites for the MVESA estimator, harness and service
