# GEMM paths and stage-aware dispatch
