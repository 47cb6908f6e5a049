"""End-to-end experiment: topology -> conflict graph -> CAs -> metrics -> simulation -> report."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from . import channel_assignment as ca_mod
from .conflict_graph import build_emmcg
from .evaluation import CPPMS, NPM_EPS_FRACTION, NPM_LABELS, build_report
from .interference_metrics import all_metrics, format_metrics_csv
from .netsim import (MODES, TCP, TEST_CASES, UDP, ResultRow, SimParams, aggregate_npms,
                     build_scenario, format_results_csv, simulate)
from .topology import GenTargets, generate_rwmn, global_metrics, read_topology, write_topology

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    seed: int
    out: str = "runs/default"
    topology_file: str | None = None
    generate: dict = field(default_factory=dict)
    channel_count: int = ca_mod.DEFAULT_CHANNELS
    ir_tr_ratio: int = 2
    schemes: list[str] = field(default_factory=lambda: list(ca_mod.PRESET_SCHEMES))
    test_cases: list[int] = field(default_factory=lambda: list(TEST_CASES))
    modes: list[str] = field(default_factory=lambda: list(MODES))
    sim: dict = field(default_factory=dict)
    npm_eps_fraction: float = NPM_EPS_FRACTION
    cppm_eps: float = 0.0
    jobs: int = 1

    def targets(self) -> GenTargets:
        known = {f.name for f in fields(GenTargets)}
        bad = set(self.generate) - known
        if bad:
            raise ConfigError(f"unknown topology.generate keys: {sorted(bad)}")
        kw = dict(self.generate)
        kw.setdefault("seed", self.seed)
        if "area" in kw:
            kw["area"] = tuple(kw["area"])
        return GenTargets(**kw)

    def sim_params(self, seed: int) -> SimParams:
        known = {f.name for f in fields(SimParams)} - {"seed"}
        bad = set(self.sim) - known
        if bad:
            raise ConfigError(f"unknown sim keys: {sorted(bad)}")
        return SimParams(**self.sim, seed=seed)

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        for s in self.schemes:
            if s.upper() not in ca_mod.SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}")
        self.schemes = [s.upper() for s in self.schemes]
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("duplicate schemes")
        self.modes = [m.upper() for m in self.modes]
        if not self.modes or any(m not in MODES for m in self.modes):
            raise ConfigError(f"modes must be a non-empty subset of {MODES}")
        if not self.test_cases or any(int(n) < 1 for n in self.test_cases):
            raise ConfigError("test_cases must be positive flow counts")
        if self.channel_count < 1 or self.ir_tr_ratio < 1 or self.jobs < 1:
            raise ConfigError("channel_count, ir_tr_ratio and jobs must be >= 1")
        self.targets()
        self.sim_params(0)


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a YAML config (optional) and apply flag overrides on top."""
    raw: dict = {}
    if path is not None:
        loaded = yaml.safe_load(Path(path).read_text())
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        raw = loaded or {}
    raw = dict(raw)
    topo = raw.pop("topology", {}) or {}
    evaluation = raw.pop("evaluation", {}) or {}
    merged = {
        **raw,
        "generate": dict(topo.get("generate", {}) or {}),
        "topology_file": topo.get("file"),
        **{k: v for k, v in evaluation.items() if k in ("npm_eps_fraction", "cppm_eps")},
    }
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key.startswith("generate."):
            merged["generate"][key.split(".", 1)[1]] = value
        elif key.startswith("sim."):
            merged.setdefault("sim", {})[key.split(".", 1)[1]] = value
        else:
            merged[key] = value
    if merged.get("seed") is None:
        raise ConfigError("a seed is required (config key 'seed' or --seed)")
    known = {f.name for f in fields(ExperimentConfig)}
    bad = set(merged) - known
    if bad:
        raise ConfigError(f"unknown config keys: {sorted(bad)}")
    cfg = ExperimentConfig(**merged)
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# stages


def obtain_topology(cfg: ExperimentConfig):
    if cfg.topology_file:
        return read_topology(cfg.topology_file)
    return generate_rwmn(cfg.targets())


def scenario_seed(cfg: ExperimentConfig, case_index: int) -> int:
    return cfg.seed * 1009 + case_index


def assign_all(cfg: ExperimentConfig, topo, cg) -> dict[str, ca_mod.ChannelAssignment]:
    return {s: ca_mod.run_ca_scheme(s, topo, cg, cfg.channel_count, cfg.seed) for s in cfg.schemes}


def _sim_job(args):
    topo, lcm, cg, scenario, params, mode, scheme, label = args
    return scheme, mode, label, simulate(topo, lcm, cg, scenario, params, mode)


def simulate_all(cfg: ExperimentConfig, topo, cg, lcms: dict[str, dict[int, int]]) -> list[ResultRow]:
    """Run the (scheme x mode x test case) grid; the same flows serve every CA."""
    jobs = []
    for k, n in enumerate(cfg.test_cases):
        sseed = scenario_seed(cfg, k)
        scenario = build_scenario(topo, None, int(n), sseed, label=f"{n}-flows")
        params = cfg.sim_params(sseed)
        for scheme in cfg.schemes:
            for mode in cfg.modes:
                jobs.append((topo, lcms[scheme], cg, scenario, params, mode, scheme, scenario.label))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            done = list(pool.map(_sim_job, jobs))
    else:
        done = [_sim_job(j) for j in jobs]
    rows = []
    for (scheme, mode, label, result), job in zip(done, jobs):
        rows.append(ResultRow(scheme, mode, label, result, job[4].seed))
    rows.sort(key=lambda r: (cfg.schemes.index(r.scheme), r.mode, int(r.test_case.split("-")[0])))
    return rows


def summarize(cfg: ExperimentConfig, rows: list[ResultRow]) -> dict[str, dict[str, float]]:
    """Per-scheme NPMs: Throughput/DFC from TCP runs, PDR/EED from UDP runs."""
    source = {"throughput": TCP, "dfc": TCP, "pdr": UDP, "eed": UDP}
    out = {}
    for scheme in cfg.schemes:
        per_mode = {}
        for mode in cfg.modes:
            per_mode[mode] = aggregate_npms(r.result for r in rows if r.scheme == scheme and r.mode == mode)
        fallback = next(iter(per_mode.values()))
        out[scheme] = {npm: per_mode.get(mode, fallback).get(npm) for npm, mode in source.items()}
    return out


@dataclass
class PipelineOutput:
    topology: object
    metrics: dict
    rows: list
    npms: dict
    report: object
    broken: dict


def run_pipeline(cfg: ExperimentConfig, write: bool = True) -> PipelineOutput:
    topo = obtain_topology(cfg)
    cg = build_emmcg(topo, cfg.ir_tr_ratio)
    cas = assign_all(cfg, topo, cg)
    lcms, broken, metrics = {}, {}, {}
    for scheme, ca in cas.items():
        lcm, br = ca_mod.live_link_channels(topo, ca)
        if not lcm:
            raise ca_mod.AssignmentError(f"{scheme}: every link is broken")
        lcms[scheme], broken[scheme] = lcm, br
        metrics[scheme] = all_metrics(topo, lcm, cg, cfg.channel_count)
        if br:
            log.warning("%s leaves %d broken link(s)", scheme, len(br))
    rows = simulate_all(cfg, topo, cg, lcms)
    npms = summarize(cfg, rows)
    report = build_report(metrics, npms, cfg.npm_eps_fraction, cfg.cppm_eps)
    out = PipelineOutput(topo, metrics, rows, npms, report, broken)
    if write:
        write_outputs(cfg, out, cas)
    return out


def write_outputs(cfg: ExperimentConfig, out: PipelineOutput, cas) -> None:
    root = Path(cfg.out)
    for sub in ("topology", "assignments", "results", "report", "report/plots"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    write_topology(out.topology, root / "topology" / "topology.json")
    (root / "topology" / "global_metrics.json").write_text(
        json.dumps(global_metrics(out.topology).as_dict(), indent=1, sort_keys=True) + "\n")
    for scheme, ca in cas.items():
        ca_mod.write_assignment(out.topology, ca, root / "assignments" / f"{scheme}.ca")
    (root / "report" / "metrics.csv").write_text(format_metrics_csv(out.metrics))
    (root / "results" / "results.csv").write_text(format_results_csv(out.rows))
    (root / "results" / "npm_summary.csv").write_text(format_npm_summary(out.npms))
    (root / "report" / "pe.csv").write_text(out.report.grid_csv("pe"))
    (root / "report" / "doc.csv").write_text(out.report.grid_csv("doc"))
    for cppm in CPPMS:
        for npm in NPM_LABELS:
            path = root / "report" / "plots" / f"{cppm}_{npm}.csv"
            path.write_text(out.report.series_csv(cppm, npm))
    (root / "config.yaml").write_text(dump_config(cfg))


def dump_config(cfg: ExperimentConfig) -> str:
    """Resolved config in the same schema ``load_config`` reads.

    Output location and worker count do not affect results, so they are left
    out and reruns into different directories diff clean.
    """
    raw = {k: v for k, v in asdict(cfg).items()
           if k not in ("out", "jobs", "generate", "topology_file", "npm_eps_fraction", "cppm_eps")}
    raw["topology"] = {"generate": dict(cfg.generate)}
    if cfg.topology_file:
        raw["topology"]["file"] = str(cfg.topology_file)
    raw["evaluation"] = {"npm_eps_fraction": cfg.npm_eps_fraction, "cppm_eps": cfg.cppm_eps}
    return yaml.safe_dump(raw, sort_keys=True)


def format_npm_summary(npms: dict[str, dict[str, float]]) -> str:
    lines = ["scheme,throughput_mbps,dfc,pdr_pct,eed_us"]
    for scheme, v in npms.items():
        lines.append(f"{scheme},{v['throughput']:.6f},{v['dfc']:.6f},{v['pdr']:.6f},{v['eed']:.3f}")
    return "\n".join(lines) + "\n"
