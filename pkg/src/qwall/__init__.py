"""Energy densities and moving-wall work for a particle in an infinite well.

Modules
-------
specfun
    Bessel functions, their zeros, spherical harmonics.
basis
    Instantaneous eigenbases of the segment, disk and sphere; couplings.
dynamics
    Coefficient evolution under constant-speed wall motion.
density
    Probability and energy densities, fluxes, wall force.
walllab
    Work experiments comparing measured and predicted work.
cli
    ``python -m qwall`` scenario runner.
"""

__version__ = "0.1.0"
