"""fellforge: exact checks for twisted Weyl algebras and their C*-scaffolding.

Modules:
    phases        exact rational-phase scalars
    algebra       presentations, normal forms, Rieffel deformation
    characters    lattice characters, positivity sweeps, the partial action
    groupoid      finite groupoids, 2-cocycles, trivialization, convolution
    fellbundle    fibres, transition phases, twist extraction, deformation
    operator_lab  truncated representations and numeric operator checks
    cli           command line front end
"""

__version__ = "0.1.0"
