# Tensor file readers
