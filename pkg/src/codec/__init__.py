# Compressor and decoders
