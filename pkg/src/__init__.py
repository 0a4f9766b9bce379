# ZipTBE source package
