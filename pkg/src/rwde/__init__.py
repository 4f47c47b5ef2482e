"""Random walks in Dirichlet environments."""
