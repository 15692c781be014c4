"""Flat key=value run configuration shared by the CLI and the service.

Strengths are given in MeV (`v_0_1 = -35.2`) or in oscillator units with
an `_hw` suffix (`v_1_1_hw = -0.81512`). `enforce_is = true` switches to
the pinned-eigenvector parametrization: only `v_1_1` stays free and the
remaining rank-2 entries are derived from `e_i_mev`.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .jmatrix import Rank2Params, SeparablePotential
from .oscbasis import DEFAULT_MASS_CONSTANT, OscillatorBasis

_V_KEY = re.compile(r"^v_(\d+)_(\d+)(_hw)?$")
_INT_KEYS = {"rank", "l", "points"}
_FLOAT_KEYS = {"hbar_omega_mev", "mass_constant", "e_i_mev", "emin_mev", "emax_mev"}
_BOOL_KEYS = {"enforce_is"}
_STR_KEYS = {"output"}


@dataclass(frozen=True)
class RunConfig:
    hbar_omega_mev: float
    rank: int
    l: int = 0
    mass_constant: float = DEFAULT_MASS_CONSTANT
    enforce_is: bool = False
    e_i_mev: float | None = None
    entries: tuple = field(default_factory=tuple)  # (i, j, value_mev) in file order
    emin_mev: float = 1.0
    emax_mev: float = 300.0
    points: int = 50
    output: str | None = None

    @property
    def basis(self) -> OscillatorBasis:
        return OscillatorBasis(self.hbar_omega_mev, self.l, self.mass_constant)

    def matrix(self) -> np.ndarray:
        """Raw potential matrix in MeV. Entries given in one order only are
        mirrored; in lenient mode conflicting mirror pairs are kept as-is,
        so the result can be asymmetric."""
        if self.enforce_is:
            return self.rank2().to_potential().v.copy()
        m = np.zeros((self.rank, self.rank))
        given = set()
        for i, j, val in self.entries:
            m[i, j] = val
            given.add((i, j))
        for i, j, val in self.entries:
            if (j, i) not in given:
                m[j, i] = val
        return m

    def potential(self) -> SeparablePotential:
        return SeparablePotential(self.basis, self.matrix())

    def rank2(self) -> Rank2Params:
        if not self.enforce_is:
            raise ConfigError("rank-2 parametrization requires enforce_is = true")
        v11 = dict(((i, j), v) for i, j, v in self.entries)[(1, 1)]
        return Rank2Params(self.basis, self.e_i_mev, 0.0, v11)


def _parse_bool(value, key, lineno):
    low = value.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError("line %d: key '%s' expects a boolean, got %r" % (lineno, key, value))


def parse_config(source, lenient: bool = False) -> RunConfig:
    """Parse a config from a path, string, or open stream.

    Strict mode rejects mirror-pair conflicts (`v_0_1` vs `v_1_0` with
    different values); lenient mode keeps them so `verify` can inspect the
    raw matrix and report the asymmetry itself.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "=" in source:
        text = source
    else:
        try:
            with open(source, "r", encoding="ascii") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("cannot read config: %s" % exc) from None

    scalars = {}
    entries = []
    v_lines = {}
    seen_keys = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected key = value" % lineno)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if not value:
            raise ConfigError("line %d: key '%s' has no value" % (lineno, key))
        if key in seen_keys:
            raise ConfigError("line %d: duplicate key '%s'" % (lineno, key))
        seen_keys.add(key)
        m = _V_KEY.match(key)
        if m:
            i, j = int(m.group(1)), int(m.group(2))
            try:
                num = float(value)
            except ValueError:
                raise ConfigError("line %d: key '%s' expects a number" % (lineno, key)) from None
            entries.append((i, j, num, bool(m.group(3)), lineno))
            v_lines[(i, j)] = lineno
            continue
        if key in _INT_KEYS:
            try:
                scalars[key] = int(value)
            except ValueError:
                raise ConfigError("line %d: key '%s' expects an integer" % (lineno, key)) from None
        elif key in _FLOAT_KEYS:
            try:
                scalars[key] = float(value)
            except ValueError:
                raise ConfigError("line %d: key '%s' expects a number" % (lineno, key)) from None
        elif key in _BOOL_KEYS:
            scalars[key] = _parse_bool(value, key, lineno)
        elif key in _STR_KEYS:
            scalars[key] = value
        else:
            raise ConfigError("line %d: unknown key '%s'" % (lineno, key))

    for required in ("hbar_omega_mev", "rank"):
        if required not in scalars:
            raise ConfigError("missing required key '%s'" % required)

    hw = scalars["hbar_omega_mev"]
    if hw <= 0.0:
        raise ConfigError("hbar_omega_mev must be positive")
    rank = scalars["rank"]
    if rank < 1:
        raise ConfigError("rank must be at least 1")
    l = scalars.get("l", 0)
    if l < 0:
        raise ConfigError("l must be non-negative")
    mass_constant = scalars.get("mass_constant", DEFAULT_MASS_CONSTANT)
    if mass_constant <= 0.0:
        raise ConfigError("mass_constant must be positive")
    emin = scalars.get("emin_mev", 1.0)
    emax = scalars.get("emax_mev", 300.0)
    points = scalars.get("points", 50)
    if emin <= 0.0 or emin >= emax:
        raise ConfigError("need 0 < emin_mev < emax_mev")
    if points < 2:
        raise ConfigError("points must be at least 2")

    resolved = []
    pair_values = {}
    for i, j, num, in_hw, lineno in entries:
        if i >= rank or j >= rank:
            raise ConfigError("line %d: index v_%d_%d outside rank %d" % (lineno, i, j, rank))
        val = num * hw if in_hw else num
        resolved.append((i, j, val))
        pair_values[(i, j)] = val
    if not lenient:
        for (i, j), val in pair_values.items():
            mirror = pair_values.get((j, i))
            if i != j and mirror is not None and mirror != val:
                raise ConfigError(
                    "v_%d_%d and v_%d_%d disagree (%g vs %g); the matrix must be symmetric"
                    % (i, j, j, i, val, mirror))

    enforce_is = scalars.get("enforce_is", False)
    e_i = scalars.get("e_i_mev")
    if enforce_is:
        if rank != 2:
            raise ConfigError("enforce_is = true requires rank = 2")
        if e_i is None:
            raise ConfigError("missing required key 'e_i_mev' (needed with enforce_is)")
        forbidden = [(i, j) for (i, j) in pair_values if (i, j) != (1, 1)]
        if forbidden:
            raise ConfigError(
                "enforce_is fixes every entry except v_1_1; remove v_%d_%d" % forbidden[0])
        if (1, 1) not in pair_values:
            raise ConfigError("missing required key 'v_1_1' (needed with enforce_is)")
    elif e_i is not None:
        raise ConfigError("e_i_mev only takes effect with enforce_is = true")

    return RunConfig(
        hbar_omega_mev=hw,
        rank=rank,
        l=l,
        mass_constant=mass_constant,
        enforce_is=enforce_is,
        e_i_mev=e_i,
        entries=tuple(resolved),
        emin_mev=emin,
        emax_mev=emax,
        points=points,
        output=scalars.get("output"),
    )


def write_config(config: RunConfig, dest) -> None:
    out = io.StringIO()
    out.write("hbar_omega_mev = %.12g\n" % config.hbar_omega_mev)
    out.write("mass_constant = %.12g\n" % config.mass_constant)
    out.write("rank = %d\n" % config.rank)
    if config.l:
        out.write("l = %d\n" % config.l)
    if config.enforce_is:
        out.write("enforce_is = true\n")
        out.write("e_i_mev = %.12g\n" % config.e_i_mev)
    for i, j, val in config.entries:
        out.write("v_%d_%d_hw = %.12g\n" % (i, j, val / config.hbar_omega_mev))
    out.write("emin_mev = %.12g\n" % config.emin_mev)
    out.write("emax_mev = %.12g\n" % config.emax_mev)
    out.write("points = %d\n" % config.points)
    if config.output:
        out.write("output = %s\n" % config.output)
    if hasattr(dest, "write"):
        dest.write(out.getvalue())
    else:
        with open(dest, "w", encoding="ascii") as fh:
            fh.write(out.getvalue())
