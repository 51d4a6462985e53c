"""Run configuration with a plain ``key = value`` file format."""
from dataclasses import asdict, dataclass, fields, replace

SNAPSHOT_MODES = ("full", "random", "skin")
KAPPA_TILDE_MODES = ("kappa", "pou_weighted")
POU_MODES = ("standard", "multiscale")
SOLVERS = ("direct", "pcg")


class ConfigError(ValueError):
    """Invalid configuration key or value."""


@dataclass(frozen=True)
class RunConfig:
    """All inputs of a run. Defaults reproduce the 10x10 coarse / 100x100 fine setup.

    The coefficient comes from ``field_path`` when set, otherwise from the
    channel generator (``contrast``, ``field_seed``, ``field_margin``; a negative
    margin means the generator default). ``g`` is ``linear`` (``x1 + x2``) or a
    constant, ``f`` a constant source.
    """

    coarse_nx: int = 10
    coarse_ny: int = 10
    fine_per_coarse: int = 10
    oversample_t: int = 3
    k_nb: int = 10
    p_bf: int = 4
    snapshot_mode: str = "random"
    kappa_tilde_mode: str = "kappa"
    pou_mode: str = "multiscale"
    seed: int = 0
    field_path: str = ""
    contrast: float = 1e4
    field_seed: int = 0
    field_margin: int = -1
    g: str = "linear"
    f: float = 0.0
    solver: str = "direct"
    theta: float = 0.3
    c_nb: int = 2
    c_bf: int = 1
    max_iter: int = 10
    target_err: float = 0.0
    lemma_k: int = 2
    lemma_l: int = 6
    lemma_tests: int = 50
    lemma_seeds: int = 5

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("coarse_nx", "coarse_ny", "fine_per_coarse", "k_nb", "c_nb", "max_iter",
                     "lemma_k", "lemma_l", "lemma_tests", "lemma_seeds"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("oversample_t", "p_bf", "c_bf", "seed", "field_seed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        for name, allowed in (("snapshot_mode", SNAPSHOT_MODES), ("kappa_tilde_mode", KAPPA_TILDE_MODES),
                              ("pou_mode", POU_MODES), ("solver", SOLVERS)):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {', '.join(allowed)}")
        if self.contrast < 1:
            raise ConfigError("contrast must be >= 1")
        if not 0 < self.theta <= 1:
            raise ConfigError("theta must lie in (0, 1]")
        if self.target_err < 0:
            raise ConfigError("target_err must be non-negative")
        if self.g != "linear":
            try:
                float(self.g)
            except ValueError:
                raise ConfigError("g must be 'linear' or a number") from None

    def boundary(self):
        """Dirichlet data as a callable or constant."""
        if self.g == "linear":
            return lambda x, y: x + y
        return float(self.g)

    def with_(self, **changes):
        return replace(self, **changes)

    def to_text(self):
        return "".join(f"{k} = {_format(v)}\n" for k, v in asdict(self).items())


def _format(v):
    return repr(v) if isinstance(v, float) else str(v)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_value(key, text):
    """Convert the string ``text`` to the type of config field ``key``."""
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _TYPES[key]
    try:
        if kind in ("int", int):
            return int(text)
        if kind in ("float", float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r}") from None
    return text.strip()


def parse_config(text, base=None):
    """Parse ``key = value`` lines (``#`` starts a comment) on top of ``base``."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = parse_value(key, value)
    return (base or RunConfig()).with_(**values)


def load_config(path, base=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base)


def save_config(path, config):
    with open(path, "w") as fh:
        fh.write(config.to_text())
