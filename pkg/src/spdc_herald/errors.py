"""Exception types raised by the package."""


class HeraldError(Exception):
    """Base class for all package errors."""


class ProfileError(HeraldError, ValueError):
    """Invalid pump profile or an operation the profile does not support."""


class GridError(HeraldError, ValueError):
    """Time grid too short or otherwise unsuitable."""


class IdentityViolation(HeraldError):
    """Discretized kernels violate the bosonic commutation identities."""


class UnsupportedOrder(HeraldError, ValueError):
    """Requested perturbative order is not available for the scenario."""


class ZeroClickRate(HeraldError, ZeroDivisionError):
    """No idler click is possible (zero pump)."""


class PositivityError(HeraldError):
    """Density matrix has a significantly negative eigenvalue."""


class RegimeError(HeraldError, ValueError):
    """Inputs fall outside the weak-drive expansion regime."""
