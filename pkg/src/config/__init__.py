# Environment configuration
