# Compute-intensity model
