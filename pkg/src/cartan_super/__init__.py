"""Cartan-type Lie superalgebras over GF(p)."""
