# TCA-TBE layout: tiling, compressed matrix, ZTBE container
