"""Outage, amount of fading and power allocation for multihop relay chains over n*Rayleigh fading."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    HopModel,
    SeverityParams,
    hop_snr_pdf,
    mrc_amplitude_pdf,
    mrc_severity,
    mrc_snr_cdf,
    mrc_snr_pdf,
    severity_params,
)
from .errors import ConfigError, DomainError, MixedCascadeOrderError, NonConvergenceError  # noqa: E402
from .multihop import (  # noqa: E402
    RelayChain,
    Scheme,
    af_cdf_bound,
    af_equivalent_snr,
    af_geometric_bound,
    af_pdf_bound,
    af_pdf_dualhop,
    af_snr_moment,
    amount_of_fading,
    db_to_linear,
    df_cdf,
    df_equivalent_snr,
    df_outage_asymptotic,
    linear_to_db,
    outage_probability,
)
from .power import PowerBudget, equal_power, pa_asymptotic, pa_dualhop, solve_pa  # noqa: E402
from .special import GKind, MeijerGParams, meijer_g  # noqa: E402
