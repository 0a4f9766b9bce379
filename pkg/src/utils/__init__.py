# Shared helpers: logging, thread pool, report writers
