"""Parameter sweeps, result files and the adaptive-M lookup table.

Sweep spec files are scenario files with an extra ``[sweep]`` table::

    num_cells = 5
    sf = 7

    [sweep]
    replications = 20
    max_points = 10000

    [sweep.axes]
    M = [1, 2, 3, 4]
    p_a = [0.05, 0.1, 0.2]

Axes are expanded row-major in the order written (first axis outermost).

Results CSV (schema 1): a ``# owcrf-aloha results schema=1`` comment line,
then a header with the swept parameters in axis order followed by
``throughput_mean, throughput_ci95, activated, captured, forwarded, decoded``.
"""

import csv
import dataclasses
import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .engine import aggregate, simulate_replication
from .scenario import (Scenario, ScenarioParseError, canonical_axis, scenario_from_mapping,
                       tomllib, with_axis_value)

SCHEMA_VERSION = 1
SCHEMA_LINE = f"# owcrf-aloha results schema={SCHEMA_VERSION}"
STAT_COLUMNS = ("throughput_mean", "throughput_ci95", "activated", "captured",
                "forwarded", "decoded")
INT_AXES = ("M", "SF")
DEFAULT_MAX_POINTS = 10_000
OUTPUT_FORMATS = ("csv", "json")


class CapExceededError(ValueError):
    pass


class MissingAxisError(ValueError):
    pass


class SweepPointError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    axes: tuple
    replications: int = None
    output_format: str = "csv"
    validate: bool = False
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        axes = tuple((canonical_axis(name), tuple(values)) for name, values in self.axes)
        object.__setattr__(self, "axes", axes)
        if not axes:
            raise ValueError("a sweep needs at least one axis")
        names = [a for a, _ in axes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate sweep axes: {names}")
        for name, values in axes:
            if not values:
                raise ValueError(f"axis {name} has no values")
        if self.output_format not in OUTPUT_FORMATS:
            raise ValueError(f"output_format must be one of {OUTPUT_FORMATS}")

    @property
    def axis_names(self):
        return [a for a, _ in self.axes]

    @property
    def num_points(self):
        n = 1
        for _, values in self.axes:
            n *= len(values)
        return n

    def points(self):
        return list(itertools.product(*(values for _, values in self.axes)))


def parse_sweep_spec(path_or_text, is_text=False):
    if is_text:
        text = path_or_text
    else:
        with open(path_or_text, "rb") as fh:
            text = fh.read().decode("utf-8")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioParseError(f"invalid TOML: {exc}") from exc
    sweep = data.pop("sweep", None)
    if not isinstance(sweep, dict) or not isinstance(sweep.get("axes"), dict):
        raise ScenarioParseError("sweep spec needs a [sweep.axes] table")
    sweep = dict(sweep)
    axes = tuple(sweep.pop("axes").items())
    opts = {}
    for key in ("replications", "max_points"):
        if key in sweep:
            opts[key] = sweep.pop(key)
    if "format" in sweep:
        opts["output_format"] = sweep.pop("format")
    if "validate" in sweep:
        opts["validate"] = bool(sweep.pop("validate"))
    if sweep:
        raise ScenarioParseError(f"unknown [sweep] field(s): {', '.join(sorted(sweep))}")
    for name, values in axes:
        if not isinstance(values, list):
            raise ScenarioParseError(f"axis {name!r} must be a list of values", field=name)
    return SweepSpec(base=scenario_from_mapping(data), axes=axes, **opts)


def _point_scenarios(spec, seed=None):
    if spec.num_points > spec.max_points:
        raise CapExceededError(
            f"sweep has {spec.num_points} points, cap is {spec.max_points}")
    base = spec.base
    if spec.replications is not None:
        base = dataclasses.replace(base, replications=spec.replications)
    if seed is not None:
        base = dataclasses.replace(base, master_seed=seed)
    scenarios = []
    for point in spec.points():
        s = base
        try:
            for name, value in zip(spec.axis_names, point):
                s = with_axis_value(s, name, value)
        except ValueError as exc:
            desc = ", ".join(f"{n}={v}" for n, v in zip(spec.axis_names, point))
            raise type(exc)(f"sweep point ({desc}): {exc}") from exc
        scenarios.append(s)
    return scenarios


def _run_task(task):
    idx, scenario, rep = task
    try:
        return simulate_replication(scenario, rep)
    except Exception as exc:
        raise SweepPointError(f"sweep point {idx} replication {rep}: {exc}") from exc


def run_sweep(spec, workers=1, seed=None, progress=None):
    """Simulate every sweep point; returns one result row (dict) per point.

    Point ``i`` replication ``r`` always uses the same random streams, so the
    rows do not depend on ``workers``.
    """
    scenarios = _point_scenarios(spec, seed)
    tasks = [(i, s, r) for i, s in enumerate(scenarios) for r in range(s.replications)]
    if workers <= 1:
        counts = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    rows = []
    pos = 0
    for point, s in zip(spec.points(), scenarios):
        st = aggregate(counts[pos:pos + s.replications])
        pos += s.replications
        row = dict(zip(spec.axis_names, point))
        row.update(throughput_mean=st.throughput_mean, throughput_ci95=st.throughput_ci95,
                   activated=st.activated, captured=st.captured,
                   forwarded=st.forwarded, decoded=st.decoded)
        rows.append(row)
        if progress is not None:
            progress(row)
    return rows


# -- result files ------------------------------------------------------------

def _columns(rows):
    if not rows:
        raise ValueError("no result rows")
    return [c for c in rows[0] if c not in STAT_COLUMNS] + list(STAT_COLUMNS)


def rows_to_csv(rows):
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    cols = _columns(rows)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
    return buf.getvalue()


def rows_to_json(rows):
    return json.dumps({"schema_version": SCHEMA_VERSION, "columns": _columns(rows),
                       "rows": rows}, indent=1) + "\n"


def _convert(col, text):
    if col in INT_AXES or col in STAT_COLUMNS[2:]:
        return int(text)
    return float(text)


def rows_from_csv(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [{k: _convert(k, v) for k, v in rec.items()} for rec in reader]


def rows_from_json(text):
    doc = json.loads(text)
    return [dict(r) for r in doc["rows"]]


def read_results(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return rows_from_json(text)
    return rows_from_csv(text)


# -- adaptive M --------------------------------------------------------------

@dataclass(frozen=True)
class AdaptiveMRow:
    key: tuple  # ((axis, value), ...) for every swept axis except M
    best_M: int
    throughput_mean: float
    throughput_ci95: float

    def as_dict(self):
        d = dict(self.key)
        d.update(best_M=self.best_M, throughput_mean=self.throughput_mean,
                 throughput_ci95=self.throughput_ci95)
        return d


@dataclass(frozen=True)
class AdaptiveMTable:
    rows: tuple = field(default_factory=tuple)

    def to_csv(self):
        buf = io.StringIO()
        dicts = [r.as_dict() for r in self.rows]
        w = csv.DictWriter(buf, fieldnames=list(dicts[0]), lineterminator="\n")
        w.writeheader()
        for d in dicts:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in d.items()})
        return buf.getvalue()


def build_adaptive_m_table(rows):
    """Best M (by mean throughput) for every combination of the other axes.

    Exact ties go to the smaller M.
    """
    rows = list(rows)
    if not rows or "M" not in rows[0]:
        raise MissingAxisError("results have no M column")
    key_cols = [c for c in rows[0] if c not in STAT_COLUMNS and c != "M"]
    best = {}
    for row in rows:
        key = tuple((c, row[c]) for c in key_cols)
        cand = (row["throughput_mean"], -row["M"])
        if key not in best or cand > best[key][0]:
            best[key] = (cand, row)
    out = []
    for key, (_, row) in best.items():
        out.append(AdaptiveMRow(key, int(row["M"]), row["throughput_mean"],
                                row["throughput_ci95"]))
    return AdaptiveMTable(tuple(out))
