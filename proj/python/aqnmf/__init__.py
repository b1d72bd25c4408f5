"""Air-quality source apportionment with non-negative matrix factorization."""

from ._core import (
    AqnmfError,
    apportion_file,
    classify_evidence,
    classify_speed,
    connectivity_matrix,
    consensus,
    contribution_shares,
    cophenetic_coefficient,
    cost,
    factorize,
    gen_factors,
    normalize_rows_minmax,
    pick_rank,
    season_of,
    select_rank,
    synth,
    validate,
    write_synth_csv,
)

__all__ = [
    "AqnmfError",
    "apportion_file",
    "classify_evidence",
    "classify_speed",
    "connectivity_matrix",
    "consensus",
    "contribution_shares",
    "cophenetic_coefficient",
    "cost",
    "factorize",
    "gen_factors",
    "normalize_rows_minmax",
    "pick_rank",
    "season_of",
    "select_rank",
    "synth",
    "validate",
    "write_synth_csv",
]
