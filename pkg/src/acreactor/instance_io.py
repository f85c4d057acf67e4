"""Readers and writers for instance files, reactor configuration and reports.

Supported inputs:

* TSP: the TSPLIB dialect restricted to ``EUC_2D`` coordinates (distances
  rounded to the nearest integer) and ``EXPLICIT`` / ``FULL_MATRIX`` weights.
* ALSP: OR-Library ``airland`` files. The runway count is not part of the
  format and is passed separately.
* RH panels: one marker per line, a name followed by a vector over
  ``1`` (present), ``0`` (absent) and ``2`` (unknown).

Every parser raises :class:`ParseError` (or its subclass
:class:`ValidationError`) carrying the 1-based line number of the problem.
"""

from __future__ import annotations

import configparser
import math
import re
import statistics
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterator

import numpy as np

from .problems import Aircraft, AlspInstance, RhPanel, TspInstance
from .reactor import ConfigError, ReactorConfig, RunReport


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        self.message = message
        where = source or "<input>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


class ValidationError(ParseError):
    """Input parsed, but describes an instance that breaks its own rules."""


def _num(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _float(token: str, line: int, source: str | None) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"expected a number, got {token!r}", line, source) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite number {token!r}", line, source)
    return value


def _tokens(text: str) -> Iterator[tuple[str, int]]:
    for lineno, raw in enumerate(text.splitlines(), 1):
        for tok in raw.split():
            yield tok, lineno


# --------------------------------------------------------------------------
# TSPLIB
# --------------------------------------------------------------------------

_SCALE_RE = re.compile(r"scale\s*=\s*([0-9.eE+-]+)")


def euc_2d(coords: np.ndarray) -> np.ndarray:
    """Euclidean distances rounded half-up to integers, as TSPLIB's ``nint``."""
    diff = coords[:, None, :] - coords[None, :, :]
    return np.floor(np.sqrt((diff ** 2).sum(axis=-1)) + 0.5)


def parse_tsplib(text: str, source: str | None = None) -> TspInstance:
    header: dict[str, str] = {}
    header_line: dict[str, int] = {}
    lines = text.splitlines()
    i = 0
    section = None
    while i < len(lines):
        raw = lines[i].strip()
        i += 1
        if not raw:
            continue
        if raw == "EOF":
            break
        if ":" in raw:
            key, value = raw.split(":", 1)
            key = key.strip().upper()
            header[key] = value.strip()
            header_line[key] = i
            continue
        key = raw.upper()
        if key in ("NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION"):
            section = key
            break
        raise ParseError(f"unrecognised line {raw!r}", i, source)
    if "DIMENSION" not in header:
        raise ParseError("missing DIMENSION", None, source)
    try:
        n = int(header["DIMENSION"])
    except ValueError:
        raise ParseError(f"bad DIMENSION {header['DIMENSION']!r}", header_line["DIMENSION"], source) from None
    if n < 2:
        raise ValidationError(f"DIMENSION must be at least 2, got {n}", header_line["DIMENSION"], source)
    ewt = header.get("EDGE_WEIGHT_TYPE", "").upper()
    name = header.get("NAME", "tsp")
    m = _SCALE_RE.search(header.get("COMMENT", ""))
    scale = float(m.group(1)) if m else 1.0

    body = [(tok, i + ln) for tok, ln in _tokens("\n".join(lines[i:])) if tok != "EOF"]
    if ewt == "EUC_2D":
        if section != "NODE_COORD_SECTION":
            raise ParseError("EUC_2D needs a NODE_COORD_SECTION", header_line.get("EDGE_WEIGHT_TYPE"), source)
        if len(body) != 3 * n:
            line = body[min(len(body), 3 * n) - 1][1] if body else i
            raise ParseError(f"expected {n} coordinate rows (3 fields each), got {len(body)} fields",
                             line, source)
        coords = np.empty((n, 2))
        seen = set()
        for r in range(n):
            (tid, ln), (tx, _), (ty, _) = body[3 * r: 3 * r + 3]
            idx = _float(tid, ln, source)
            if idx != r + 1 or idx in seen:
                raise ParseError(f"node ids must run 1..{n} in order, got {tid}", ln, source)
            seen.add(idx)
            coords[r] = _float(tx, ln, source), _float(ty, ln, source)
        return TspInstance(euc_2d(coords), symmetric=True, name=name, coords=coords, scale=scale)
    if ewt == "EXPLICIT":
        fmt = header.get("EDGE_WEIGHT_FORMAT", "").upper()
        if fmt != "FULL_MATRIX":
            raise ParseError(f"unsupported EDGE_WEIGHT_FORMAT {fmt or '(missing)'!r}",
                             header_line.get("EDGE_WEIGHT_FORMAT"), source)
        if section != "EDGE_WEIGHT_SECTION":
            raise ParseError("EXPLICIT weights need an EDGE_WEIGHT_SECTION", None, source)
        if len(body) != n * n:
            line = body[-1][1] if body else i
            raise ParseError(f"expected {n * n} matrix entries for DIMENSION {n}, got {len(body)}",
                             line, source)
        values = [_float(tok, ln, source) for tok, ln in body]
        costs = np.array(values).reshape(n, n)
        for r in range(n):
            if costs[r, r] != 0:
                raise ValidationError(f"diagonal entry {r + 1} must be 0", body[r * n + r][1], source)
        if (costs < 0).any():
            r, c = map(int, np.argwhere(costs < 0)[0])
            raise ValidationError("negative edge weight", body[r * n + c][1], source)
        return TspInstance(costs, symmetric=bool(np.array_equal(costs, costs.T)), name=name, scale=scale)
    raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt or '(missing)'!r}",
                     header_line.get("EDGE_WEIGHT_TYPE"), source)


def write_tsplib(instance: TspInstance, comment: str | None = None) -> str:
    n = instance.n
    out = [f"NAME : {instance.name}", "TYPE : TSP" if instance.symmetric else "TYPE : ATSP"]
    if comment is None and instance.scale != 1.0:
        comment = f"scale={_num(instance.scale)}"
    if comment:
        out.append(f"COMMENT : {comment}")
    out.append(f"DIMENSION : {n}")
    if instance.coords is not None:
        out += ["EDGE_WEIGHT_TYPE : EUC_2D", "NODE_COORD_SECTION"]
        out += [f"{i + 1} {_num(x)} {_num(y)}" for i, (x, y) in enumerate(instance.coords)]
    else:
        out += ["EDGE_WEIGHT_TYPE : EXPLICIT", "EDGE_WEIGHT_FORMAT : FULL_MATRIX", "EDGE_WEIGHT_SECTION"]
        out += [" ".join(_num(v) for v in row) for row in instance.costs]
    out.append("EOF")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# OR-Library airland
# --------------------------------------------------------------------------


def parse_airland(text: str, runways: int = 1, source: str | None = None, name: str = "alsp") -> AlspInstance:
    toks = list(_tokens(text))
    pos = 0

    def take(what: str) -> tuple[float, int]:
        nonlocal pos
        if pos >= len(toks):
            last = toks[-1][1] if toks else 1
            raise ParseError(f"file ended while reading {what}", last, source)
        tok, ln = toks[pos]
        pos += 1
        return _float(tok, ln, source), ln

    count, ln = take("aircraft count")
    if count != int(count) or count < 1:
        raise ValidationError(f"aircraft count must be a positive integer, got {_num(count)}", ln, source)
    p = int(count)
    freeze, _ = take("freeze time")
    aircraft = []
    sep = np.zeros((p, p))
    for i in range(p):
        appear, ln = take(f"aircraft {i + 1} appearance time")
        e, _ = take(f"aircraft {i + 1} earliest time")
        t, _ = take(f"aircraft {i + 1} target time")
        l, _ = take(f"aircraft {i + 1} latest time")
        g, _ = take(f"aircraft {i + 1} early penalty")
        h, _ = take(f"aircraft {i + 1} late penalty")
        if not e <= t <= l:
            raise ValidationError(f"aircraft {i + 1}: need earliest <= target <= latest, got "
                                  f"{_num(e)}, {_num(t)}, {_num(l)}", ln, source)
        if g < 0 or h < 0:
            raise ValidationError(f"aircraft {i + 1}: negative penalty coefficient", ln, source)
        aircraft.append(Aircraft(e, t, l, g, h, appear))
        for j in range(p):
            s, sln = take(f"separation row {i + 1}")
            if s < 0:
                raise ValidationError(f"negative separation time for aircraft {i + 1}", sln, source)
            sep[i, j] = s
    if pos != len(toks):
        raise ParseError(f"unexpected trailing data {toks[pos][0]!r} (row length mismatch?)",
                         toks[pos][1], source)
    try:
        return AlspInstance(aircraft, sep, runways=runways, name=name, freeze_time=freeze)
    except ValueError as exc:
        raise ValidationError(str(exc), None, source) from None


def write_airland(instance: AlspInstance) -> str:
    p = instance.n
    out = [f"{p} {_num(instance.freeze_time)}"]
    for i, a in enumerate(instance.aircraft):
        out.append(" ".join(_num(v) for v in (a.appearance, a.earliest, a.target, a.latest,
                                              a.early_penalty, a.late_penalty)))
        row = [99999.0 if j == i else instance.sep[i, j] for j in range(p)]
        out.append(" ".join(_num(v) for v in row))
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# RH panels
# --------------------------------------------------------------------------


def parse_rh_panel(text: str, source: str | None = None, name: str = "rh") -> RhPanel:
    names: list[str] = []
    rows: list[list[int]] = []
    width = None
    first_line = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'name vector'", lineno, source)
        marker, vec = parts
        bad = [c for c in vec if c not in "012"]
        if bad:
            raise ParseError(f"marker {marker}: invalid character {bad[0]!r} (allowed 0, 1, 2)", lineno, source)
        if width is None:
            width, first_line = len(vec), lineno
        elif len(vec) != width:
            raise ParseError(f"marker {marker}: vector length {len(vec)} differs from {width} "
                             f"(line {first_line})", lineno, source)
        if set(vec) == {"2"}:
            raise ValidationError(f"marker {marker} has no typed hybrid", lineno, source)
        names.append(marker)
        rows.append([int(c) for c in vec])
    if len(rows) < 2:
        raise ValidationError(f"an RH panel needs at least 2 markers, got {len(rows)}", None, source)
    return RhPanel(np.array(rows, dtype=np.int8), names=names, name=name)


def write_rh_panel(panel: RhPanel) -> str:
    return "".join(f"{nm} {''.join(str(int(c)) for c in row)}\n" for nm, row in zip(panel.names, panel.cells))


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

_INSTANCE_KEYS = {"tsp", "alsp", "rh", "runways", "tsp_capacity", "alsp_capacity", "rh_capacity", "repeats"}


@dataclass
class RunConfig:
    reactor: ReactorConfig = field(default_factory=ReactorConfig)
    tsp: list[Path] = field(default_factory=list)
    alsp: list[Path] = field(default_factory=list)
    rh: list[Path] = field(default_factory=list)
    runways: int = 1
    tsp_capacity: int = 40
    alsp_capacity: int = 40
    rh_capacity: int = 40
    repeats: int = 10


def parse_config(text: str, source: str | None = None, base: Path | None = None) -> RunConfig:
    """Read an INI document with optional ``[reactor]`` and ``[instances]`` sections.

    Missing keys keep the :class:`RunConfig` / :class:`ReactorConfig` defaults;
    unknown sections or keys are rejected. Relative instance paths resolve
    against ``base``.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0], getattr(exc, "lineno", None), source) from None
    lines = text.splitlines()

    def line_of(section: str, key: str) -> int | None:
        in_sec = False
        for n, raw in enumerate(lines, 1):
            s = raw.strip()
            if s.startswith("["):
                in_sec = s.strip("[]").strip() == section
            elif in_sec and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
                return n
        return None

    for sec in cp.sections():
        if sec not in ("reactor", "instances"):
            line = next((n for n, raw in enumerate(lines, 1) if raw.strip() == f"[{sec}]"), None)
            raise ParseError(f"unknown section [{sec}]", line, source)
    reactor_fields = {f.name: f for f in fields(ReactorConfig)}
    values: dict = {}
    if cp.has_section("reactor"):
        for key, raw in cp.items("reactor"):
            if key not in reactor_fields:
                raise ParseError(f"unknown key {key!r} in [reactor]", line_of("reactor", key), source)
            default = getattr(ReactorConfig(), key)
            try:
                if key == "reactions_per_epoch":
                    values[key] = None if raw.strip().lower() in ("", "none", "auto") else int(raw)
                elif isinstance(default, bool):
                    values[key] = cp.getboolean("reactor", key)
                elif isinstance(default, int):
                    values[key] = int(raw)
                else:
                    values[key] = float(raw)
            except ValueError:
                raise ParseError(f"bad value {raw!r} for {key}", line_of("reactor", key), source) from None
    try:
        reactor = ReactorConfig(**values)
    except ConfigError as exc:
        raise ValidationError(str(exc), None, source) from None
    run = RunConfig(reactor=reactor)
    base = base or Path(".")
    if cp.has_section("instances"):
        for key, raw in cp.items("instances"):
            if key not in _INSTANCE_KEYS:
                raise ParseError(f"unknown key {key!r} in [instances]", line_of("instances", key), source)
            if key in ("tsp", "alsp", "rh"):
                setattr(run, key, [base / p for p in raw.split()])
            else:
                try:
                    value = int(raw)
                except ValueError:
                    raise ParseError(f"bad value {raw!r} for {key}", line_of("instances", key), source) from None
                if value < 1 or (key.endswith("capacity") and value < 2):
                    raise ValidationError(f"{key} out of range: {value}", line_of("instances", key), source)
                setattr(run, key, value)
    return run


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), source=str(path), base=path.parent)


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


def _mean_std(values: list[float]) -> tuple[float, float | None]:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) >= 2 else None
    return mean, std


@dataclass
class GroupSummary:
    group_id: int
    kind: str
    name: str
    n: int
    metric_divisor: float
    best_masses: list[float]
    saturation_epochs: list[int | None]
    best_perm: tuple[int, ...]
    counts: dict[str, int]

    @property
    def metric_name(self) -> str:
        return {"tsp": "tour length", "alsp": "penalty cost", "rh": "breaks per marker"}[self.kind]

    @property
    def metrics(self) -> list[float]:
        return [m / self.metric_divisor for m in self.best_masses]

    @property
    def best_mass(self) -> float:
        return min(self.best_masses)

    @property
    def mean_mass(self) -> float:
        return _mean_std(self.best_masses)[0]

    @property
    def std_mass(self) -> float | None:
        return _mean_std(self.best_masses)[1]

    @property
    def mean_metric(self) -> float:
        return _mean_std(self.metrics)[0]

    @property
    def std_metric(self) -> float | None:
        return _mean_std(self.metrics)[1]


@dataclass
class ReportDocument:
    seed: int
    repeats: int
    epochs: list[int]
    groups: list[GroupSummary]


def metric_divisor(instance) -> float:
    if instance.kind == "rh":
        return float(instance.markers)
    if instance.kind == "tsp":
        return float(instance.scale)
    return 1.0


def build_report(runs: list[RunReport], instances: list) -> ReportDocument:
    """Aggregate repeated runs over the same groups into one document."""
    if not runs:
        raise ValueError("no runs to report")
    groups = []
    for gid, inst in enumerate(instances):
        results = [r.groups[gid] for r in runs]
        best = min(results, key=lambda g: g.best_mass)
        counts = {k: sum(g.counts[k] for g in results) for k in results[0].counts}
        groups.append(GroupSummary(
            group_id=gid, kind=inst.kind, name=results[0].name, n=inst.n,
            metric_divisor=metric_divisor(inst),
            best_masses=[g.best_mass for g in results],
            saturation_epochs=[g.saturation_epoch for g in results],
            best_perm=tuple(best.best_perm), counts=counts,
        ))
    return ReportDocument(seed=runs[0].seed, repeats=len(runs), epochs=[r.epochs for r in runs], groups=groups)


def format_mean_std(mean: float, std: float | None, digits: int = 2) -> str:
    if std is None:
        return f"{mean:.{digits}f}"
    return f"{mean:.{digits}f} ({std:.{digits}f})"


def _table(report: ReportDocument) -> str:
    header = ["Group", "Kind", "Name", "Size", "Metric", "Best", "Mean" if report.repeats < 2 else "Mean (std. dev.)",
              "Saturated", "R1", "R2", "R3"]
    rows = []
    for g in report.groups:
        digits = 0 if g.kind == "alsp" else 2
        sat = sum(e is not None for e in g.saturation_epochs)
        rows.append([
            str(g.group_id), g.kind, g.name, str(g.n), g.metric_name,
            f"{min(g.metrics):.{digits}f}",
            format_mean_std(g.mean_metric, g.std_metric, digits),
            f"{sat}/{len(g.saturation_epochs)}",
            str(g.counts.get("R1", 0)), str(g.counts.get("R2", 0)), str(g.counts.get("R3", 0)),
        ])
    widths = [max(len(r[c]) for r in [header] + rows) for c in range(len(header))]
    rule = "=" * (sum(widths) + 2 * (len(widths) - 1))

    def fmt(r):
        return "  ".join(cell.rjust(w) if k >= 3 else cell.ljust(w) for k, (cell, w) in enumerate(zip(r, widths)))

    lines = [f"repeats={report.repeats} seed={report.seed} epochs={','.join(map(str, report.epochs))}",
             rule, fmt(header), "-" * len(rule)]
    lines += [fmt(r) for r in rows]
    lines.append(rule)
    return "\n".join(lines) + "\n"


def _machine(report: ReportDocument) -> str:
    out = [
        f"report.seed={report.seed}",
        f"report.repeats={report.repeats}",
        f"report.epochs={','.join(map(str, report.epochs))}",
        f"report.groups={len(report.groups)}",
    ]
    for g in report.groups:
        p = f"group.{g.group_id}."
        out += [
            f"{p}kind={g.kind}",
            f"{p}name={g.name}",
            f"{p}n={g.n}",
            f"{p}metric_divisor={g.metric_divisor!r}",
            f"{p}best_masses={','.join(repr(float(m)) for m in g.best_masses)}",
            f"{p}saturation_epochs={','.join('-' if e is None else str(e) for e in g.saturation_epochs)}",
            f"{p}best_perm={','.join(map(str, g.best_perm))}",
        ]
        out += [f"{p}count.{k}={v}" for k, v in g.counts.items()]
        out += [f"{p}best_mass={g.best_mass!r}", f"{p}mean_mass={g.mean_mass!r}",
                f"{p}std_mass={'-' if g.std_mass is None else repr(g.std_mass)}",
                f"{p}mean_metric={g.mean_metric!r}",
                f"{p}std_metric={'-' if g.std_metric is None else repr(g.std_metric)}"]
    return "\n".join(out) + "\n"


def write_report(report: ReportDocument, fmt: str = "table") -> str:
    if fmt == "table":
        return _table(report)
    if fmt == "machine":
        return _machine(report)
    raise ValueError(f"unknown report format {fmt!r}")


def parse_machine_report(text: str, source: str | None = None) -> ReportDocument:
    """Inverse of ``write_report(..., "machine")``. Derived statistics are recomputed, not read."""
    kv: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        if "=" not in raw:
            raise ParseError("expected key=value", lineno, source)
        key, value = raw.split("=", 1)
        kv[key.strip()] = (value.strip(), lineno)

    def get(key):
        if key not in kv:
            raise ParseError(f"missing key {key}", None, source)
        return kv[key]

    def as_int(key):
        v, ln = get(key)
        try:
            return int(v)
        except ValueError:
            raise ParseError(f"{key}: expected integer, got {v!r}", ln, source) from None

    def as_list(key, conv):
        v, ln = get(key)
        if not v:
            return []
        try:
            return [conv(x) for x in v.split(",")]
        except ValueError:
            raise ParseError(f"{key}: bad list {v!r}", ln, source) from None

    groups = []
    for gid in range(as_int("report.groups")):
        p = f"group.{gid}."
        counts = {}
        for key, (v, ln) in kv.items():
            if key.startswith(p + "count."):
                try:
                    counts[key[len(p) + 6:]] = int(v)
                except ValueError:
                    raise ParseError(f"{key}: expected integer", ln, source) from None
        groups.append(GroupSummary(
            group_id=gid,
            kind=get(p + "kind")[0],
            name=get(p + "name")[0],
            n=as_int(p + "n"),
            metric_divisor=as_list(p + "metric_divisor", float)[0],
            best_masses=as_list(p + "best_masses", float),
            saturation_epochs=as_list(p + "saturation_epochs", lambda x: None if x == "-" else int(x)),
            best_perm=tuple(as_list(p + "best_perm", int)),
            counts=counts,
        ))
    return ReportDocument(seed=as_int("report.seed"), repeats=as_int("report.repeats"),
                          epochs=as_list("report.epochs", int), groups=groups)
