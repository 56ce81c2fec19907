# Empty file to make scripts a package
