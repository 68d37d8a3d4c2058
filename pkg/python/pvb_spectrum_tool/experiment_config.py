"""
Experiment configs: dotenv-style KEY=VALUE files with `# [section]` headers.

Example:

    # [experiment]
    EXPERIMENT_ID=harmonic_quickstart
    # [model]
    MODEL_KIND=harmonic
    MODEL_OMEGA=1.0
    # [dvr]
    DVR_FAMILY=periodic_sinc
    DVR_N=129

Lists are comma separated; `inf` is a valid float. Unknown keys, repeated keys
and values that fail validation raise ConfigError naming the line and the key.
"""
# imports from built-in packages
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

# imports from external packages (in requirements.txt)
from dotenv.parser import parse_stream

# imports from same project
from constants import (
    DEFAULT_PLOT_POINTS,
    DIRECT_DVR,
    DOUBLE_WELL,
    DVR_FAMILIES,
    GAUSS_LEGENDRE,
    HARMONIC,
    LATTICE_BALANCED,
    LATTICE_EXPLICIT,
    LATTICE_RULES,
    LATTICE_SQUARE,
    MODEL_KINDS,
    MORSE,
    PERIODIC_SINC,
    PRUNE_ALL,
    PRUNE_ENERGY_SHELL,
    PRUNE_STRATEGIES,
    PRUNE_TOP_K,
    PVB_REPRESENTATIONS,
)
from errors import ConfigError, InvalidArgumentError
from grid_dvr import DvrBasis, build_legendre_dvr, build_periodic_grid, build_sinc_dvr
from operators import HarmonicPotential, MorsePotential, PotentialModel, QuarticDoubleWell, default_domain
from solver import PruneStrategy

logger = logging.getLogger(__name__)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"expected true or false, got '{text}'")


def _parse_float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


def _parse_optional_float(text: str) -> Optional[float]:
    return _parse_float(text) if text.strip() else None


def _parse_optional_int(text: str) -> Optional[int]:
    return int(text) if text.strip() else None


def _split(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _parse_int_list(text: str) -> Tuple[int, ...]:
    return tuple(int(item) for item in _split(text))


def _parse_float_list(text: str) -> Tuple[float, ...]:
    return tuple(_parse_float(item) for item in _split(text))


def _parse_name_list(text: str) -> Tuple[str, ...]:
    return tuple(item.lower() for item in _split(text))


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format_value(item) for item in value)
    return str(value)


@dataclass(frozen=True)
class _Key:
    name: str
    attribute: str
    parse: Callable[[str], object]
    section: str


_KEYS: List[_Key] = [
    _Key("EXPERIMENT_ID", "experiment_id", str.strip, "experiment"),
    _Key("RANDOM_SEED", "random_seed", int, "experiment"),
    _Key("MODEL_KIND", "model_kind", lambda text: text.strip().lower(), "model"),
    _Key("MODEL_OMEGA", "model_omega", _parse_float, "model"),
    _Key("MODEL_DEPTH", "model_depth", _parse_float, "model"),
    _Key("MODEL_ALPHA", "model_alpha", _parse_float, "model"),
    _Key("MODEL_XE", "model_xe", _parse_float, "model"),
    _Key("MODEL_C2", "model_c2", _parse_float, "model"),
    _Key("MODEL_C4", "model_c4", _parse_float, "model"),
    _Key("MODEL_MASS", "mass", _parse_float, "model"),
    _Key("DVR_FAMILY", "dvr_family", lambda text: text.strip().lower(), "dvr"),
    _Key("DVR_X_MIN", "x_min", _parse_optional_float, "dvr"),
    _Key("DVR_X_MAX", "x_max", _parse_optional_float, "dvr"),
    _Key("DVR_N", "n_values", _parse_int_list, "dvr"),
    _Key("LATTICE_RULE", "lattice_rule", lambda text: text.strip().lower(), "lattice"),
    _Key("LATTICE_NX", "lattice_nx", _parse_optional_int, "lattice"),
    _Key("LATTICE_NP", "lattice_np", _parse_optional_int, "lattice"),
    _Key("SOLVE_REPRESENTATIONS", "representations", _parse_name_list, "solve"),
    _Key("SOLVE_LEVELS", "levels", _parse_optional_int, "solve"),
    _Key("SOLVE_REGULARIZE", "regularize", _parse_bool, "solve"),
    _Key("PRUNE_STRATEGY", "prune_strategy", lambda text: text.strip().lower(), "prune"),
    _Key("PRUNE_VALUES", "prune_values", _parse_float_list, "prune"),
    _Key("OUTPUT_DIR", "output_dir", str.strip, "output"),
    _Key("OUTPUT_ECHO_CONFIG", "echo_config", _parse_bool, "output"),
    _Key("BASIS_INDICES", "basis_indices", _parse_int_list, "basis"),
    _Key("BASIS_PLOT_POINTS", "plot_points", int, "basis"),
]
_KEYS_BY_NAME: Dict[str, _Key] = {key.name: key for key in _KEYS}
_REQUIRED_KEYS = ("EXPERIMENT_ID", "MODEL_KIND", "DVR_N")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment: model, DVR, lattice rule, representations, pruning and output.

    Optional fields left as None take their defaults at run time: the model's default
    domain for DVR_X_MIN / DVR_X_MAX and the level rule of SOLVE_LEVELS.
    """
    experiment_id: str
    model_kind: str
    n_values: Tuple[int, ...]
    model_omega: float = 1.0
    model_depth: float = 10.0
    model_alpha: float = 1.0
    model_xe: float = 0.0
    model_c2: float = 1.0
    model_c4: float = 0.1
    mass: float = 1.0
    dvr_family: str = PERIODIC_SINC
    x_min: Optional[float] = None
    x_max: Optional[float] = None
    lattice_rule: str = LATTICE_BALANCED
    lattice_nx: Optional[int] = None
    lattice_np: Optional[int] = None
    representations: Tuple[str, ...] = ()
    levels: Optional[int] = None
    regularize: bool = True
    prune_strategy: str = PRUNE_ALL
    prune_values: Tuple[float, ...] = ()
    output_dir: str = "results"
    echo_config: bool = True
    basis_indices: Tuple[int, ...] = ()
    plot_points: int = DEFAULT_PLOT_POINTS
    random_seed: int = 0

    def build_model(self) -> PotentialModel:
        """
        Raises:
            InvalidArgumentError: If the model parameters are invalid.
        """
        if self.model_kind == HARMONIC:
            return HarmonicPotential(omega=self.model_omega)
        if self.model_kind == MORSE:
            return MorsePotential(depth=self.model_depth, alpha=self.model_alpha, x_e=self.model_xe)
        if self.model_kind == DOUBLE_WELL:
            return QuarticDoubleWell(c2=self.model_c2, c4=self.model_c4)
        raise InvalidArgumentError(f"Unknown model kind '{self.model_kind}', expected one of {MODEL_KINDS}.")

    @property
    def domain(self) -> Tuple[float, float]:
        a, b = default_domain(self.build_model())
        return (a if self.x_min is None else self.x_min, b if self.x_max is None else self.x_max)

    def build_dvr(self, n: int) -> DvrBasis:
        a, b = self.domain
        if self.dvr_family == GAUSS_LEGENDRE:
            return build_legendre_dvr(a, b, n)
        return build_sinc_dvr(build_periodic_grid(a, b - a, n))

    def lattice_shape(self, n: int) -> Tuple[int, int]:
        """
        Resolves (Nx, Np) for size N under the configured lattice rule.

        Raises:
            InvalidArgumentError: If the rule cannot factor N.
        """
        if self.lattice_rule == LATTICE_EXPLICIT:
            if self.lattice_nx is None or self.lattice_np is None:
                raise InvalidArgumentError("The explicit lattice rule needs LATTICE_NX and LATTICE_NP.")
            if self.lattice_nx * self.lattice_np != n:
                raise InvalidArgumentError(
                    f"Lattice needs Nx * Np = N, got {self.lattice_nx} * {self.lattice_np} != {n}."
                )
            return self.lattice_nx, self.lattice_np
        root = math.isqrt(n)
        if self.lattice_rule == LATTICE_SQUARE:
            if root * root != n:
                raise InvalidArgumentError(f"The square lattice rule needs a perfect square N, got {n}.")
            return root, root
        nx = max(d for d in range(1, root + 1) if n % d == 0)
        return nx, n // nx

    def prune_strategies(self) -> List[PruneStrategy]:
        if self.prune_strategy == PRUNE_ALL:
            return [PruneStrategy()]
        return [PruneStrategy(kind=self.prune_strategy, parameter=value) for value in self.prune_values]

    def validate(self, lines: Optional[Dict[str, int]] = None) -> "ExperimentConfig":
        """
        Checks every referenced parameter before any computation.

        Args:
            lines (dict, optional): Key name to line number, used for error context.

        Returns:
            ExperimentConfig: self, for chaining.

        Raises:
            ConfigError: On the first invalid field.
        """
        lines = lines or {}

        def fail(message: str, key: str):
            raise ConfigError(message, field=key, line=lines.get(key))

        if not self.experiment_id:
            fail("EXPERIMENT_ID must not be empty.", "EXPERIMENT_ID")
        if self.model_kind not in MODEL_KINDS:
            fail(f"Unknown model kind '{self.model_kind}', expected one of {MODEL_KINDS}.", "MODEL_KIND")
        if not self.mass > 0:
            fail(f"Mass must be positive, got {self.mass}.", "MODEL_MASS")
        try:
            self.build_model()
        except InvalidArgumentError as e:
            fail(str(e), "MODEL_KIND")
        if self.dvr_family not in DVR_FAMILIES:
            fail(f"Unknown DVR family '{self.dvr_family}', expected one of {DVR_FAMILIES}.", "DVR_FAMILY")
        a, b = self.domain
        if not (math.isfinite(a) and math.isfinite(b) and b > a):
            fail(f"DVR domain needs finite x_min < x_max, got ({a}, {b}).", "DVR_X_MAX")
        if not self.n_values:
            fail("DVR_N needs at least one value.", "DVR_N")
        if any(n < 2 for n in self.n_values):
            fail(f"Every DVR size must be at least 2, got {list(self.n_values)}.", "DVR_N")
        if len(set(self.n_values)) != len(self.n_values):
            fail(f"DVR sizes must be distinct, got {list(self.n_values)}.", "DVR_N")

        if self.lattice_rule not in LATTICE_RULES:
            fail(f"Unknown lattice rule '{self.lattice_rule}', expected one of {LATTICE_RULES}.", "LATTICE_RULE")
        for n in self.n_values:
            try:
                self.lattice_shape(n)
            except InvalidArgumentError as e:
                fail(str(e), "LATTICE_NX" if self.lattice_rule == LATTICE_EXPLICIT else "LATTICE_RULE")

        unknown = [rep for rep in self.representations if rep not in PVB_REPRESENTATIONS]
        if unknown:
            fail(f"Unknown representation(s) {unknown}, expected any of {PVB_REPRESENTATIONS}.", "SOLVE_REPRESENTATIONS")
        if self.levels is not None and self.levels < 1:
            fail(f"SOLVE_LEVELS must be at least 1, got {self.levels}.", "SOLVE_LEVELS")

        if self.prune_strategy not in PRUNE_STRATEGIES:
            fail(f"Unknown prune strategy '{self.prune_strategy}', expected one of {PRUNE_STRATEGIES}.", "PRUNE_STRATEGY")
        if self.prune_strategy == PRUNE_TOP_K:
            for value in self.prune_values:
                if value < 1 or value != int(value) or value > min(self.n_values):
                    fail(f"Top-k values must be integers in [1, {min(self.n_values)}], got {value}.", "PRUNE_VALUES")
        if self.prune_strategy in (PRUNE_ENERGY_SHELL, PRUNE_TOP_K) and not self.prune_values:
            fail(f"Prune strategy '{self.prune_strategy}' needs PRUNE_VALUES.", "PRUNE_VALUES")
        if len(set(self.prune_values)) != len(self.prune_values):
            fail(f"Prune values must be distinct, got {list(self.prune_values)}.", "PRUNE_VALUES")

        if not self.output_dir:
            fail("OUTPUT_DIR must not be empty.", "OUTPUT_DIR")
        if self.plot_points < 2:
            fail(f"BASIS_PLOT_POINTS must be at least 2, got {self.plot_points}.", "BASIS_PLOT_POINTS")
        for index in self.basis_indices:
            if not 0 <= index < self.n_values[0]:
                fail(f"Basis index {index} out of range for N={self.n_values[0]}.", "BASIS_INDICES")
        return self

    def to_env_text(self) -> str:
        """Serializes the config in the same grammar parse_config_text reads."""
        out = []
        section = None
        for key in _KEYS:
            if key.section != section:
                section = key.section
                if out:
                    out.append("")
                out.append(f"# [{section}]")
            out.append(f"{key.name}={_format_value(getattr(self, key.attribute))}")
        return "\n".join(out) + "\n"

    def echo_lines(self) -> List[str]:
        return [line for line in self.to_env_text().splitlines() if line and not line.startswith("#")]


def _binding_line(binding) -> int:
    # a binding's mark sits on the first blank line before it
    text = binding.original.string
    leading = text[: len(text) - len(text.lstrip())]
    return binding.original.line + leading.count("\n")


def parse_config_text(text: str) -> ExperimentConfig:
    """
    Parses and validates an experiment config.

    Args:
        text (str): Config file contents.

    Returns:
        ExperimentConfig: The validated config.

    Raises:
        ConfigError: For malformed lines, unknown or repeated keys, missing required
            keys and invalid values, with the line number and key attached.
    """
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for binding in parse_stream(io.StringIO(text)):
        line = _binding_line(binding)
        if binding.error:
            raise ConfigError(f"Malformed line: {binding.original.string.strip()!r}", line=line)
        if binding.key is None:
            continue
        name = binding.key.strip().upper()
        key = _KEYS_BY_NAME.get(name)
        if key is None:
            raise ConfigError(
                f"Unknown key '{binding.key}'; known keys: {', '.join(config_fields())}.", field=name, line=line
            )
        if name in lines:
            raise ConfigError(f"Key repeated (first set on line {lines[name]}).", field=name, line=line)
        if binding.value is None:
            raise ConfigError("Key has no value; expected KEY=VALUE.", field=name, line=line)
        try:
            values[key.attribute] = key.parse(binding.value)
        except ValueError as e:
            raise ConfigError(f"Invalid value {binding.value!r}: {e}", field=name, line=line) from e
        lines[name] = line

    missing = [name for name in _REQUIRED_KEYS if name not in lines]
    if missing:
        raise ConfigError(f"Missing required key(s) {missing}.", field=missing[0])

    # a representation list may name the direct solve, which always runs
    if "representations" in values:
        values["representations"] = tuple(rep for rep in values["representations"] if rep != DIRECT_DVR)

    config = ExperimentConfig(**values)
    config.validate(lines)
    logger.debug(f"Parsed config '{config.experiment_id}' with {len(lines)} key(s).")
    return config


def load_config(path: Path) -> ExperimentConfig:
    """
    Reads and validates an experiment config file.

    Raises:
        ConfigError: If the file is missing or invalid.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"))


def config_fields() -> List[str]:
    """Config key names in serialization order."""
    return [key.name for key in _KEYS]
