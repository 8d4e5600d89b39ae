"""Declarative scenarios: flat ``key = value`` files, runs, sweeps and reports.

A scenario file has no section headers. Seeds are given either as an
explicit ``layout`` (comma-separated -1/0/+1), as ``sites`` with optional
``signs``, or generated from a cyclic ``spacing`` list and a spot count::

    name = fig4
    N = 100
    spacing = 7, 8, 10
    spots = 12
    c = 29
    E0 = formula

``c`` may be a comma-separated list, which makes the scenario a sweep.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .classify import ClassifyConfig, portrait_from_orbit, portrait_from_wave
from .errors import ConfigurationError, InvalidPatternError
from .lattice import BC, ModelParams, SeedPattern, build_seed, rayleigh_energy
from .mapping import MapState, iterate
from .output import fmt, write_json, write_orbit, write_portrait, write_trace, write_wave
from .solver import Outcome, SolveConfig, map_reconstruction_error, solve

SOLVER_KEYS = ("tol", "max_iter", "e_jump", "bound", "damping")
CLASSIFY_KEYS = ("cluster_tol", "resolution", "loop_gap_ratio", "min_points")
KNOWN_KEYS = frozenset(
    (
        "name", "N", "bc", "layout", "sites", "signs", "spacing", "spots", "spot_size", "start",
        "n", "m", "l", "c", "E0", "E0_reference", "expected_class", "map_check", "note", "output",
    )
    + SOLVER_KEYS
    + CLASSIFY_KEYS
)
_SECTION = "scenario"


@dataclass(frozen=True)
class Scenario:
    name: str
    pattern: SeedPattern
    c: tuple[float, ...]
    E0: float | None = None  # None: large-coupling formula
    solve: SolveConfig = field(default_factory=SolveConfig)
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)
    map_check: bool = False
    E0_reference: float | None = None
    expected_class: str | None = None
    note: str = ""
    output: str | None = None

    @property
    def N(self) -> int:
        return self.pattern.N

    @property
    def bc(self) -> BC:
        return self.pattern.bc

    @property
    def is_sweep(self) -> bool:
        return len(self.c) > 1

    def energy(self, c: float) -> float:
        return self.pattern.energy(c) if self.E0 is None else self.E0

    def single(self, c: float) -> "Scenario":
        return dataclasses.replace(self, c=(float(c),))


@dataclass
class RunReport:
    name: str
    N: int
    bc: str
    layout: list[int]
    c: float
    E0: float
    outcome: str
    iterations: int
    structure_change_at: int | None = None
    E_diag: float | None = None
    E_rayleigh: float | None = None
    C: float | None = None
    H: float | None = None
    residual_inf: float | None = None
    n_clusters: int | None = None
    classification: str | None = None
    gap_ratio: float | None = None
    expected_class: str | None = None
    map_error: float | None = None
    files: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.outcome in (Outcome.CONVERGED.value, Outcome.STRUCTURE_CHANGED.value)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# -- parsing -----------------------------------------------------------------


def _ints(key: str, text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise ConfigurationError(key, f"expected comma-separated integers, got {text!r}") from None


def _floats(key: str, text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise ConfigurationError(key, f"expected comma-separated numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ConfigurationError(key, "values must be finite")
    return vals


def _int(key: str, text: str) -> int:
    v = _ints(key, text)
    if len(v) != 1:
        raise ConfigurationError(key, f"expected one integer, got {text!r}")
    return v[0]


def _float(key: str, text: str) -> float:
    v = _floats(key, text)
    if len(v) != 1:
        raise ConfigurationError(key, f"expected one number, got {text!r}")
    return v[0]


def _bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(key, f"expected a boolean, got {text!r}")


def _layout(kv: Mapping[str, str], N: int | None) -> tuple[list[int], str]:
    """Build the sign layout; also returns the key responsible for it."""
    given = [k for k in ("layout", "sites", "spacing") if k in kv]
    if len(given) != 1:
        raise ConfigurationError("layout", "give exactly one of layout, sites or spacing")
    src = given[0]
    if src == "layout":
        lay = _ints("layout", kv["layout"])
        if N is not None and len(lay) != N:
            raise ConfigurationError("layout", f"has {len(lay)} entries but N = {N}")
        if any(x not in (-1, 0, 1) for x in lay):
            raise ConfigurationError("layout", "entries must be -1, 0 or 1")
        return lay, src
    if N is None:
        raise ConfigurationError("N", f"required when the seed is given by {src}")
    if src == "sites":
        sites = _ints("sites", kv["sites"])
    else:
        spacing = _ints("spacing", kv["spacing"])
        if not spacing or any(s < 1 for s in spacing):
            raise ConfigurationError("spacing", "needs positive integers")
        if "spots" not in kv:
            raise ConfigurationError("spots", "required with spacing")
        spots = _int("spots", kv["spots"])
        if spots < 1:
            raise ConfigurationError("spots", "must be >= 1")
        size = _int("spot_size", kv["spot_size"]) if "spot_size" in kv else 1
        if size < 1:
            raise ConfigurationError("spot_size", "must be >= 1")
        pos = _int("start", kv["start"]) if "start" in kv else 0
        sites = []
        for k in range(spots):
            sites.extend(range(pos, pos + size))
            pos += spacing[k % len(spacing)]
    if not sites:
        raise ConfigurationError(src, "no occupied sites")
    if any(s < 0 or s >= N for s in sites):
        raise ConfigurationError(src, f"site index outside 0..{N - 1}")
    if len(set(sites)) != len(sites):
        raise ConfigurationError(src, "sites overlap")
    signs = _ints("signs", kv["signs"]) if "signs" in kv else [1]
    if not signs or any(s not in (-1, 1) for s in signs):
        raise ConfigurationError("signs", "entries must be -1 or 1")
    lay = [0] * N
    for k, s in enumerate(sites):
        lay[s] = signs[k % len(signs)]
    return lay, src


def scenario_from_mapping(kv: Mapping[str, str]) -> Scenario:
    """Validate raw string key/values into a :class:`Scenario`."""
    kv = {k.strip(): str(v).strip() for k, v in kv.items()}
    unknown = sorted(set(kv) - KNOWN_KEYS)
    if unknown:
        raise ConfigurationError(unknown[0], "unknown key")
    name = kv.get("name", "scenario")
    N = _int("N", kv["N"]) if "N" in kv else None
    if N is not None and N < 1:
        raise ConfigurationError("N", "must be >= 1")
    try:
        bc = BC.parse(kv.get("bc", "pbc"))
    except ValueError:
        raise ConfigurationError("bc", f"expected pbc or obc, got {kv['bc']!r}") from None
    lay, src = _layout(kv, N)
    declared = {k: _int(k, kv[k]) for k in ("n", "m", "l") if k in kv}
    try:
        pattern = SeedPattern(tuple(lay), bc)
    except InvalidPatternError as exc:
        raise ConfigurationError(src, str(exc)) from None
    for k, want in declared.items():
        if getattr(pattern, k) != want:
            raise ConfigurationError(k, f"declared {want} but the layout gives {getattr(pattern, k)}")
    if "c" not in kv:
        raise ConfigurationError("c", "required")
    cs = _floats("c", kv["c"])
    if not cs:
        raise ConfigurationError("c", "sweep list is empty")
    e0 = kv.get("E0", "formula").lower()
    E0 = None if e0 in ("formula", "limit", "from_limit_formula") else _float("E0", kv["E0"])
    if E0 is None:
        try:
            pattern.energy(cs[0])
        except InvalidPatternError as exc:
            raise ConfigurationError("E0", f"formula needs a valid (n, m, l): {exc}") from None
    try:
        scfg = SolveConfig(
            **{
                k: (_bool(k, kv[k]) if k == "damping" else _int(k, kv[k]) if k == "max_iter" else _float(k, kv[k]))
                for k in SOLVER_KEYS
                if k in kv
            }
        )
    except ValueError as exc:
        raise ConfigurationError(_first(kv, SOLVER_KEYS, exc), str(exc)) from None
    try:
        ccfg = ClassifyConfig(
            **{k: (_int(k, kv[k]) if k == "min_points" else _float(k, kv[k])) for k in CLASSIFY_KEYS if k in kv}
        )
    except ValueError as exc:
        raise ConfigurationError(_first(kv, CLASSIFY_KEYS, exc), str(exc)) from None
    return Scenario(
        name=name,
        pattern=pattern,
        c=tuple(cs),
        E0=E0,
        solve=scfg,
        classify=ccfg,
        map_check=_bool("map_check", kv["map_check"]) if "map_check" in kv else False,
        E0_reference=_float("E0_reference", kv["E0_reference"]) if "E0_reference" in kv else None,
        expected_class=kv.get("expected_class"),
        note=kv.get("note", ""),
        output=kv.get("output"),
    )


def _first(kv, keys, exc) -> str:
    if isinstance(exc, ConfigurationError):
        return exc.field
    msg = str(exc)
    return next((k for k in keys if k in kv and msg.startswith(k)), next((k for k in keys if k in kv), keys[0]))


def parse_text(text: str) -> dict[str, str]:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError("file", str(exc).splitlines()[0]) from None
    return dict(cp[_SECTION])


def parse_overrides(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigurationError("--set", f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_scenario(path_or_name, overrides: Mapping[str, str] | None = None) -> Scenario:
    """Load a scenario file, or a built-in scenario by name (``fig1`` .. ``fig8``)."""
    p = Path(str(path_or_name))
    if p.is_file():
        text = p.read_text()
    elif str(path_or_name) in builtin_names():
        text = builtin_text(str(path_or_name))
    else:
        raise ConfigurationError("scenario", f"no such file or built-in scenario: {path_or_name}")
    kv = parse_text(text)
    kv.update(overrides or {})
    return scenario_from_mapping(kv)


def builtin_names() -> list[str]:
    files = resources.files("dnls").joinpath("scenarios")
    return sorted(f.name[:-4] for f in files.iterdir() if f.name.endswith(".ini"))


def builtin_text(name: str) -> str:
    return resources.files("dnls").joinpath("scenarios", f"{name}.ini").read_text()


# -- running -----------------------------------------------------------------


def _tag(s: Scenario, c: float) -> str:
    return s.name if not s.is_sweep else f"{s.name}_c{fmt(c)}"


def run_scenario(s: Scenario, out_dir=None, c: float | None = None) -> RunReport:
    """Solve one scenario at one coupling and write its files.

    Solver failures are reported through ``outcome``; the iteration trace is
    written either way.
    """
    c = float(s.c[0] if c is None else c)
    E0 = s.energy(c)
    p = ModelParams(c, E0, s.N, s.bc)
    rep = RunReport(
        name=s.name, N=s.N, bc=s.bc.value, layout=list(s.pattern.layout), c=c, E0=E0,
        outcome="", iterations=0, expected_class=s.expected_class,
    )
    if s.note:
        rep.notes.append(s.note)
    if s.E0_reference is not None and abs(s.E0_reference - E0) > 1e-9 * max(1.0, abs(E0)):
        rep.notes.append(f"reference E0 {fmt(s.E0_reference)} differs from the value used, {fmt(E0)}")
    state, trace = solve(build_seed(s.pattern), p, s.solve)
    rep.outcome = trace.outcome.value
    rep.iterations = trace.iterations
    rep.structure_change_at = trace.structure_change_at
    rep.message = trace.message
    out = Path(out_dir) if out_dir is not None else None
    tag = _tag(s, c)
    if out is not None:
        rep.files["trace"] = str(write_trace(out / f"{tag}_trace.csv", trace.records))
    if state is None:
        if out is not None:
            rep.files["report"] = str(out / f"{tag}_report.json")
            write_json(rep.files["report"], rep.to_dict())
        return rep
    rep.E_diag = state.E_diag
    rep.E_rayleigh = rayleigh_energy(state.psi, c)
    rep.C, rep.H, rep.residual_inf = state.C, state.H, state.residual_inf
    portrait = portrait_from_wave(state.psi, s.classify, p)
    rep.n_clusters = portrait.n_clusters
    rep.classification = str(portrait.classification)
    rep.gap_ratio = portrait.classification.gap_ratio
    if s.map_check and s.bc is BC.PBC:
        rep.map_error = map_reconstruction_error(state.psi, p)
    if out is not None:
        rep.files["wave"] = str(write_wave(out / f"{tag}_wave.csv", state.psi.values))
        rep.files["portrait"] = str(
            write_portrait(out / f"{tag}_portrait.csv", portrait.points, portrait.clusters.labels)
        )
        rep.files["report"] = str(out / f"{tag}_report.json")
        write_json(rep.files["report"], rep.to_dict())
    return rep


def _run_one(args) -> RunReport:
    s, out_dir, c = args
    return run_scenario(s, out_dir, c)


def run_sweep(s: Scenario, out_dir=None, jobs: int = 1) -> list[RunReport]:
    """Run every ``c`` of a scenario; parallel when ``jobs > 1``, ordered as listed."""
    tasks = [(s, out_dir, c) for c in s.c]
    if jobs <= 1 or len(tasks) == 1:
        reports = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
            reports = list(ex.map(_run_one, tasks))
    if out_dir is not None:
        write_summary(Path(out_dir) / f"{s.name}_summary.json", reports)
    return reports


def write_summary(path, reports) -> Path:
    return write_json(path, {"runs": [r.to_dict() for r in reports]})


@dataclass
class MapReport:
    Z0: float
    psi0: float
    c: float
    E: float
    steps: int
    status: str
    diverged_at: int | None
    n_points: int
    n_clusters: int
    classification: str
    files: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def run_map(
    s0: MapState,
    p: ModelParams,
    steps: int,
    bound: float = 1e8,
    out_dir=None,
    cfg: ClassifyConfig | None = None,
    name: str = "map",
) -> MapReport:
    """Iterate the map and classify the visited points.

    A divergent orbit is still written up to and including the step that
    left the bounding box; its class is reported as ``Divergent``.
    """
    orbit = iterate(s0, p, steps, bound)
    portrait = portrait_from_orbit(orbit, cfg)
    rep = MapReport(
        Z0=float(s0[0]), psi0=float(s0[1]), c=p.c, E=p.E, steps=steps, status=orbit.status,
        diverged_at=orbit.diverged_at, n_points=len(orbit), n_clusters=portrait.n_clusters,
        classification=str(portrait.classification),
    )
    if out_dir is not None:
        out = Path(out_dir)
        rep.files["orbit"] = str(write_orbit(out / f"{name}_orbit.csv", orbit.states))
        labels = np.asarray(portrait.clusters.labels)
        rep.files["portrait"] = str(write_portrait(out / f"{name}_portrait.csv", portrait.points, labels))
        rep.files["report"] = str(out / f"{name}_report.json")
        write_json(rep.files["report"], rep.to_dict())
    return rep
