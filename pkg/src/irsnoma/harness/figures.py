"""Sweep presets for the figure reproductions at desk and full scale."""

from __future__ import annotations

from .config import ConfigError, ExperimentConfig, default_output

FIGURES = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9")
SCALES = ("desk", "full")

_IRS_SCHEMES = ("ideal", "continuous", "discrete(1)", "discrete(2)", "sdr", "random-phase",
                "no-irs")

# figure -> (sweep axis, desk values, full values, schemes)
_PRESETS = {
    "fig3": ("M", (30,), (30,), ("ideal", "continuous")),
    "fig4": ("M", (10, 20, 30, 40), (10, 20, 30, 40, 50, 60), _IRS_SCHEMES),
    "fig5": ("P_T", (0.0, 5.0, 10.0, 15.0, 20.0), (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
             _IRS_SCHEMES),
    "fig6": ("N", (1, 2, 3, 4), (1, 2, 3, 4, 5, 6), _IRS_SCHEMES),
    "fig7": ("B", (1, 2, 3, 4), (1, 2, 3, 4),
             ("discrete", "one-bit-srocr", "ideal", "continuous")),
    "fig8": ("M", (10, 20, 30), (10, 20, 30, 40, 50, 60),
             ("noma-exhaustive", "noma-random-order")),
    "fig9": ("M", (10, 20, 30, 40), (10, 20, 30, 40, 50, 60), ("continuous", "oma")),
}


def preset(figure: str, scale: str = "desk", seed: int = 0,
           output: str | None = None) -> ExperimentConfig:
    """Experiment config for one figure.

    Desk scale uses 10 trials with M ≤ 40 and K = 4; full scale uses 100.
    The convergence figure is a single realization at both scales.  At desk
    scale the order comparison runs its 24 orders with the ideal IRS, the
    full scale with continuous phases.
    """
    if figure not in _PRESETS:
        raise ConfigError(f"unknown figure {figure!r}; choose from {FIGURES}")
    if scale not in SCALES:
        raise ConfigError(f"scale must be one of {SCALES}")
    axis, desk, full, schemes = _PRESETS[figure]
    trials = 1 if figure == "fig3" else (10 if scale == "desk" else 100)
    order_irs = "ideal" if (figure == "fig8" and scale == "desk") else "continuous"
    return ExperimentConfig(
        name=f"{figure}-{scale}", schemes=schemes, trials=trials, base_seed=seed,
        sweep=axis, values=desk if scale == "desk" else full, order_irs=order_irs,
        output=output if output is not None else default_output())
