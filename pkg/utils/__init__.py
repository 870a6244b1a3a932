# Harness, CSV export and background job helpers
