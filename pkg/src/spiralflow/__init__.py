"""Spiral potential flow outside a porous body.

Subpackages: gas closures, radial background flows, annular meshing, the
variational stream-function solver, parameter continuation, and a CLI.
"""

__version__ = "0.1.0"
