"""Water-pipe failure prediction: thin Python surface over the C++ core."""

from ._core import (
    ConvergenceError,
    DataError,
    InvalidArgumentError,
    concordance,
    cox_fit,
    fit_logit,
    gbt_fit_predict,
    gbt_shap,
    run_command,
    score_probabilities,
    smote_balance,
)

__all__ = [
    "ConvergenceError",
    "DataError",
    "InvalidArgumentError",
    "concordance",
    "config_text",
    "cox_fit",
    "fit_logit",
    "gbt_fit_predict",
    "gbt_shap",
    "run_command",
    "score_probabilities",
    "smote_balance",
]


def config_text(**keys):
    """Render keyword arguments as the key = value text run_command expects.

    Booleans become true/false; everything else uses str().
    """
    lines = []
    for key, value in keys.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
