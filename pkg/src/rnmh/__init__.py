"""
Maxwell-Higgs fields on a Reissner-Nordstrom exterior: simulator and
audit harness for the energy identities and decay bounds.
"""

__version__ = "0.1.0"
