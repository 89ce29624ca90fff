# Core lattice and Weyl-transform modules
