# Exponent statistics and distribution models
