"""Closed geodesics on the modular surface for real quadratic discriminants.

Library layout:

* forms        - binary quadratic forms, reduction cycles, fundamental units
* classgroup   - quadratic orders, proper ideals, optimal embeddings
* geodesics    - the surface, fundamental-domain reduction, closed orbits
* stats        - invariant-measure sampling and equidistribution statistics
* ternary      - representations of binary by ternary forms, local invariants
* dynamics     - time-one map, cusp excursions, Bowen covers, entropy bounds
* cli          - command-line front end
"""

__version__ = "0.1.0"
