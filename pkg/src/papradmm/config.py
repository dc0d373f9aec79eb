"""Experiment configuration: defaults, key=value config files, CLI overrides."""

import dataclasses
from dataclasses import dataclass


class ConfigError(ValueError):
    """Bad configuration file or option combination (CLI exit code 2)."""


def _parse_float_list(text: str) -> tuple:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


@dataclass
class ExperimentConfig:
    """All knobs of the Monte Carlo drivers, with the stock defaults.

    ``rho``/``rho_tilde`` default to the per-solver standards (100 for the
    direct engine, 300/100 for the relaxed one) when left unset.
    """

    n_carriers: int = 64
    n_data: int = 52
    n_free: int = 12
    oversample: int = 4
    constellation: str = "16qam"
    n_symbols: int = 5000
    alpha_db: float = 4.0
    beta: float = 0.15
    beta_grid: tuple = (0.0, 0.15, 0.3)
    solver: str = "direct"
    rho: float | None = None
    rho_tilde: float | None = None
    iterations: int = 5
    rcf_iterations: int = 10
    eps: float = 1e-8
    seed: int = 12345
    ebn0_db: tuple = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    channel: str = "awgn"
    pa_enabled: bool = True
    sspa_p: float = 3.0
    ibo_db: float = 4.1
    cp_len: int = 64
    bandwidth_hz: float = 20e6
    ccdf_min_db: float = 2.0
    ccdf_max_db: float = 12.0
    ccdf_step_db: float = 0.05
    psd_seg_len: int = 1024
    psd_window: str = "hann"
    bench_sizes: tuple = (64.0, 256.0, 1024.0)
    bench_batch: int = 64
    bench_repeats: int = 5
    workers: int = 1
    out_dir: str = "results"

    _FLOAT_TUPLES = ("beta_grid", "ebn0_db", "bench_sizes")
    _SOLVERS = ("direct", "relax", "rcf", "none")
    _CHANNELS = ("awgn", "multipath")

    def validate(self) -> "ExperimentConfig":
        if self.n_data + self.n_free != self.n_carriers:
            raise ConfigError(
                f"n_data ({self.n_data}) + n_free ({self.n_free}) "
                f"!= n_carriers ({self.n_carriers})"
            )
        if self.solver not in self._SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; pick from {self._SOLVERS}")
        if self.channel not in self._CHANNELS:
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.alpha_db <= 0:
            raise ConfigError("alpha_db must be > 0")
        if self.beta < 0 or any(b < 0 for b in self.beta_grid):
            raise ConfigError("beta values must be >= 0")
        if self.oversample < 1:
            raise ConfigError("oversample must be >= 1")
        if self.n_symbols < 1 or self.iterations < 0:
            raise ConfigError("n_symbols must be >= 1 and iterations >= 0")
        rho, rho_tilde = self.resolved_penalties()
        if self.solver == "relax" and rho <= 2.0 * rho_tilde:
            raise ConfigError(
                f"relax solver needs rho > 2*rho_tilde (got {rho}, {rho_tilde})"
            )
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    def resolved_penalties(self, solver: str | None = None) -> tuple:
        """(rho, rho_tilde) with per-solver defaults filled in."""
        solver = solver or self.solver
        if solver == "relax":
            return (
                self.rho if self.rho is not None else 300.0,
                self.rho_tilde if self.rho_tilde is not None else 100.0,
            )
        return (self.rho if self.rho is not None else 100.0, self.rho_tilde)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        """Parse a line-based ``key = value`` file (``#`` starts a comment)."""
        values = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
                key, text = (tok.strip() for tok in line.split("=", 1))
                values[key] = text
        return cls().with_overrides(**values)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Copy with string- or native-typed overrides applied and validated."""
        fields = {f.name: f for f in dataclasses.fields(self)}
        updates = {}
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in fields or key.startswith("_"):
                raise ConfigError(f"unknown configuration key {key!r}")
            updates[key] = self._coerce(key, value)
        return dataclasses.replace(self, **updates).validate()

    def _coerce(self, key: str, value):
        if not isinstance(value, str):
            return value
        text = value.strip()
        if key in self._FLOAT_TUPLES:
            try:
                return _parse_float_list(text)
            except ValueError as exc:
                raise ConfigError(f"bad list for {key!r}: {text!r}") from exc
        current = getattr(type(self)(), key)
        try:
            if isinstance(current, bool):
                if text.lower() in ("1", "true", "yes", "on"):
                    return True
                if text.lower() in ("0", "false", "no", "off"):
                    return False
                raise ValueError(text)
            if isinstance(current, int):
                return int(text)
            if isinstance(current, float) or current is None:  # rho, rho_tilde
                return float(text)
            return text
        except ValueError as exc:
            raise ConfigError(f"cannot parse {key}={text!r}") from exc
