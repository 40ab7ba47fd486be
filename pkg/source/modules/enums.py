from enum import Enum, IntEnum


class ExitCode(IntEnum):
    OK = 0
    FAILURE = 1
    USAGE = 2
    CONVERGENCE = 3
    MISSING_DATA = 4


class Group(Enum):
    U = "U"
    SO_EVEN = "SO_even"
    USP = "USp"

    @property
    def doubled(self) -> bool:
        """SO(2N) and USp(2N) are indexed by N but drawn at size 2N."""
        return self is not Group.U


class FamilyKind(Enum):
    PRINCIPAL = "principal"
    SELF_CM = "self_cm"
    NON_SELF_DUAL = "non_self_dual"

    @property
    def group(self) -> Group:
        return {
            FamilyKind.PRINCIPAL: Group.SO_EVEN,
            FamilyKind.SELF_CM: Group.USP,
            FamilyKind.NON_SELF_DUAL: Group.U,
        }[self]


class ProviderMode(Enum):
    ETA_PRODUCT = "eta_product"
    THETA_SERIES = "theta_series"
    EISENSTEIN_PRODUCT = "eisenstein_product"
    FILE = "file"


class DistributionKind(Enum):
    LOWEST_ZERO = "lowest_zero"
    LOWEST_EIGENPHASE = "lowest_eigenphase"
    CENTRAL_VALUE = "central_value"
    CHARPOLY_VALUE = "charpoly_value"


class CutoffMode(Enum):
    ZEROS_VS_EXCISED = "zeros_vs_excised"
    VALUES_VS_CHARPOLY = "values_vs_charpoly"


class CentralValueMethod(Enum):
    DIRECT = "direct"
    KZ = "kz"
    BOTH = "both"
