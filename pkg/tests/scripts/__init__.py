# Empty file to make scripts tests a package
