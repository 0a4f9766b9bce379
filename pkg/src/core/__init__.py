# Core types: BF16 words, configuration, errors
