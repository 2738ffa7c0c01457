"""Bit-defined file interfaces: portable graymaps (PGM), history CSVs,
and the flat ``key = value`` run configuration.

Graymaps cover both ASCII (P2) and binary (P5) variants on read and
always write binary; sample values scale linearly to [0, 1].  CSV output
is UTF-8 with LF line endings and 6-significant-digit floats.
"""

import math
import warnings
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigurationError
from .problems import ImageGrid
from .solvers import IterationRecord, RunReport

__all__ = [
    "PgmParseError",
    "RunConfig",
    "read_pgm",
    "write_pgm",
    "write_history_csv",
    "append_classical_dp_row",
    "parse_config",
    "parse_value",
    "validate_config",
]

HISTORY_HEADER = "m,rel_residual_pct,rel_error_pct,sparsity,objective"
SNAPSHOT_HEADER = "gamma,m,rel_residual_pct,rel_error_pct,sparsity"


class PgmParseError(ValueError):
    """Malformed or truncated PGM input; carries the failing byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


def read_pgm(path) -> ImageGrid:
    """Read a P2 (ASCII) or P5 (binary) graymap, scaling samples to [0, 1].

    Header comments (``#`` to end of line) are skipped.  Binary rasters
    use one byte per sample for maxval < 256, two big-endian bytes up to
    65535.
    """
    data = open(path, "rb").read()
    pos = 0

    def skip_separators():
        nonlocal pos
        while pos < len(data):
            c = data[pos:pos + 1]
            if c in (b" ", b"\t", b"\r", b"\n"):
                pos += 1
            elif c == b"#":
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl + 1
            else:
                return

    def next_token(what: str):
        nonlocal pos
        skip_separators()
        start = pos
        while pos < len(data) and data[pos:pos + 1] not in (b" ", b"\t", b"\r", b"\n", b"#"):
            pos += 1
        if pos == start:
            raise PgmParseError(f"unexpected end of data while reading {what}", start)
        return data[start:pos], start

    def next_int(what: str) -> int:
        token, start = next_token(what)
        try:
            return int(token)
        except ValueError:
            raise PgmParseError(f"invalid {what} {token!r}", start) from None

    magic, magic_off = next_token("magic number")
    if magic not in (b"P2", b"P5"):
        raise PgmParseError(f"unsupported magic number {magic!r}", magic_off)
    width = next_int("width")
    height = next_int("height")
    if width < 1 or height < 1:
        raise PgmParseError(f"non-positive image size {width}x{height}", magic_off)
    maxval_off = pos
    maxval = next_int("maxval")
    if not 1 <= maxval <= 65535:
        raise PgmParseError(f"maxval {maxval} outside [1, 65535]", maxval_off)

    count = width * height
    if magic == b"P5":
        if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\t", b"\r", b"\n"):
            raise PgmParseError("missing single whitespace before binary raster", pos)
        pos += 1
        bytes_per = 1 if maxval < 256 else 2
        need = count * bytes_per
        if len(data) - pos < need:
            raise PgmParseError(
                f"truncated raster: need {need} bytes, found {len(data) - pos}", len(data)
            )
        raw = np.frombuffer(data[pos:pos + need],
                            dtype=np.uint8 if bytes_per == 1 else ">u2")
        samples = raw.astype(float)
        over = np.nonzero(samples > maxval)[0]
        if over.size:
            raise PgmParseError(f"sample {int(samples[over[0]])} exceeds maxval {maxval}",
                                pos + int(over[0]) * bytes_per)
    else:
        values = []
        for _ in range(count):
            start = pos
            v = next_int("raster sample")
            if not 0 <= v <= maxval:
                raise PgmParseError(f"sample {v} outside [0, {maxval}]", start)
            values.append(v)
        samples = np.array(values, dtype=float)
    return ImageGrid(rows=height, cols=width, pixels=samples / maxval)


def write_pgm(grid: ImageGrid, path, maxval: int = 255) -> None:
    """Write a binary (P5) graymap.

    Pixels are clamped to [0, 1] and quantized round-half-up onto the
    maxval scale; maxval above 255 switches to two-byte big-endian
    samples.
    """
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval must lie in [1, 65535], got {maxval}")
    if not np.all(np.isfinite(grid.pixels)):
        raise ValueError("cannot write non-finite pixel values")
    clamped = np.clip(grid.pixels, 0.0, 1.0)
    q = np.floor(clamped * maxval + 0.5)
    header = f"P5\n{grid.cols} {grid.rows}\n{maxval}\n".encode("ascii")
    payload = q.astype(np.uint8).tobytes() if maxval < 256 else q.astype(">u2").tobytes()
    with open(path, "wb") as fh:
        fh.write(header + payload)


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.6g}"


def write_history_csv(report: RunReport, path) -> None:
    """Write the per-iteration history, then any ladder snapshots.

    Snapshot rows follow a ``# snapshots`` comment line with their own
    header.  Floats carry 6 significant digits; missing relative errors
    print as empty fields.
    """
    lines = [HISTORY_HEADER]
    for rec in report.history:
        rel_err_pct = None if rec.rel_error is None else 100.0 * rec.rel_error
        lines.append(f"{rec.m},{_fmt(rec.rel_residual_pct)},{_fmt(rel_err_pct)},"
                     f"{rec.sparsity},{_fmt(rec.objective)}")
    if report.snapshots:
        lines.append("# snapshots")
        lines.append(SNAPSHOT_HEADER)
        for s in report.snapshots:
            lines.append(f"{_fmt(s.gamma)},{s.m},{_fmt(s.rel_residual_pct)},"
                         f"{_fmt(s.rel_error_pct)},{s.sparsity}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def append_classical_dp_row(path, gamma_pct: float, rec: IterationRecord) -> None:
    """Append the classical discrepancy-principle reference row to a history CSV."""
    rel_err_pct = None if rec.rel_error is None else 100.0 * rec.rel_error
    with open(path, "a", encoding="utf-8", newline="\n") as fh:
        fh.write("# classical_dp\n")
        fh.write(SNAPSHOT_HEADER + "\n")
        fh.write(f"{_fmt(gamma_pct)},{rec.m},{_fmt(rec.rel_residual_pct)},"
                 f"{_fmt(rel_err_pct)},{rec.sparsity}\n")


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; every field has a default.

    Zero means "auto" for ``k`` (about a tenth of the pixel count),
    ``tau`` (derived from the operator-norm estimate), ``delta`` and
    ``mdp_delta_est`` (the measured noise norm).
    """

    # problem
    side: int = 64
    sigma: float = 4.0
    band: int = 16
    image: str = "sparse"          # sparse | dense
    source_count: int = 20
    seed: int = 0
    rho: float = 0.10
    # solver
    method: str = "tg"             # tg | ista | fista | nu
    rule: str = "none"             # none | fixed | alpha | topk | min_combo | max_combo
    lam: float = 0.0
    alpha: float = 40.0
    k: int = 0
    nu: float = 1.0
    step: str = "exact"            # exact | fixed
    tau: float = 0.0
    xmin: float = 0.0              # -inf disables the bound
    # stopping
    stop: str = "dp"               # dp | maxiter | never
    delta: float = 0.0
    eta: float = 1.01
    max_iters: int = 1000
    # threshold ladder
    mdp_count: int = 4
    mdp_spacing: float = 0.5
    mdp_eta: float = 1.0
    mdp_delta_est: float = 0.0
    # comparison grid
    methods: str = "tg,ista,fista"
    rules: str = "none,fixed,alpha:10,alpha:40,topk,min_combo,max_combo"
    constraints: str = "0"
    # outputs
    out_image: str = "recovered.pgm"
    out_csv: str = "history.csv"
    out_prefix: str = "snapshot"


_INT_KEYS = {"side", "band", "source_count", "seed", "k", "max_iters", "mdp_count"}
_FLOAT_KEYS = {"sigma", "rho", "lam", "alpha", "nu", "tau", "xmin", "delta", "eta",
               "mdp_spacing", "mdp_eta", "mdp_delta_est"}
_CHOICE_KEYS = {
    "image": ("sparse", "dense"),
    "method": ("tg", "ista", "fista", "nu"),
    "rule": ("none", "fixed", "alpha", "topk", "min_combo", "max_combo"),
    "step": ("exact", "fixed"),
    "stop": ("dp", "maxiter", "never"),
}
_STR_KEYS = {"methods", "rules", "constraints", "out_image", "out_csv", "out_prefix"}
CONFIG_KEYS = tuple(f.name for f in fields(RunConfig))


def parse_value(key: str, raw: str):
    """Parse one config value by key; unknown keys and bad values raise."""
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            value = float(raw)
            if math.isnan(value):
                raise ValueError("nan")
            return value
    except ValueError:
        raise ConfigurationError(f"key '{key}': cannot parse {raw!r}") from None
    if key in _CHOICE_KEYS:
        if raw not in _CHOICE_KEYS[key]:
            raise ConfigurationError(
                f"key '{key}': {raw!r} is not one of {_CHOICE_KEYS[key]}"
            )
        return raw
    if key in _STR_KEYS:
        return raw
    raise ConfigurationError(f"unknown config key '{key}'")


def validate_config(cfg: RunConfig) -> None:
    """Range checks; raises ``ConfigurationError`` naming the offending key."""
    def require(ok: bool, key: str, why: str):
        if not ok:
            raise ConfigurationError(f"key '{key}': {why}")

    require(cfg.side >= 1, "side", f"must be positive, got {cfg.side}")
    require(cfg.sigma > 0, "sigma", f"must be positive, got {cfg.sigma}")
    require(1 <= cfg.band <= cfg.side, "band",
            f"must satisfy 1 <= band <= side, got {cfg.band} with side {cfg.side}")
    require(0 < cfg.source_count < cfg.side * cfg.side, "source_count",
            f"must lie in (0, side^2), got {cfg.source_count}")
    require(cfg.rho > 0, "rho", f"must be positive, got {cfg.rho}")
    require(cfg.lam >= 0, "lam", f"must be non-negative, got {cfg.lam}")
    require(0 <= cfg.alpha <= 100, "alpha", f"must lie in [0, 100], got {cfg.alpha}")
    require(cfg.k >= 0, "k", f"must be non-negative, got {cfg.k}")
    require(cfg.nu > 0, "nu", f"must be positive, got {cfg.nu}")
    require(cfg.tau >= 0, "tau", f"must be non-negative (0 = auto), got {cfg.tau}")
    require(cfg.xmin != float("inf"), "xmin", "must be a real number or -inf")
    require(cfg.delta >= 0, "delta", f"must be non-negative (0 = auto), got {cfg.delta}")
    if cfg.stop == "dp":
        require(cfg.eta > 1, "eta", f"discrepancy stopping needs eta > 1, got {cfg.eta}")
    require(cfg.max_iters >= 1, "max_iters", f"must be positive, got {cfg.max_iters}")
    require(cfg.mdp_count >= 1, "mdp_count", f"must be positive, got {cfg.mdp_count}")
    require(cfg.mdp_spacing > 0, "mdp_spacing",
            f"must be positive, got {cfg.mdp_spacing}")
    require(cfg.mdp_eta >= 1, "mdp_eta", f"must be >= 1, got {cfg.mdp_eta}")
    require(cfg.mdp_delta_est >= 0, "mdp_delta_est",
            f"must be non-negative (0 = auto), got {cfg.mdp_delta_est}")


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` lines into a validated config.

    ``#`` starts a comment; keys are case-sensitive; for duplicate keys
    the last occurrence wins (with a warning).  Empty text yields all
    defaults.
    """
    overrides = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw_value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key = key.strip()
        if key in overrides:
            warnings.warn(f"duplicate config key '{key}' on line {lineno}; "
                          "last occurrence wins", UserWarning, stacklevel=2)
        overrides[key] = parse_value(key, raw_value)
    cfg = replace(RunConfig(), **overrides)
    validate_config(cfg)
    return cfg


def merge_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Apply already-parsed key/value overrides (CLI flags beat file values)."""
    merged = replace(cfg, **overrides)
    validate_config(merged)
    return merged
