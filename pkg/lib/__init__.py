# Library package for the boundary-layer separation toolkit
