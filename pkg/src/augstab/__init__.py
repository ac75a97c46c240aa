"""Combinatorics and numerics of augmented stability conditions.

The package is organised as

* :mod:`augstab.level_tree` -- rooted level trees and contractions;
* :mod:`augstab.multiscale_line` -- configurations on level trees;
* :mod:`augstab.moduli` -- chart coordinates, real blowup, limit detection;
* :mod:`augstab.mass_phase` -- mass measures and the g_t inequalities;
* :mod:`augstab.models` -- the disjoint-points and projective-line models;
* :mod:`augstab.cli` -- the ``augstab`` command.
"""

__version__ = "0.1.0"
