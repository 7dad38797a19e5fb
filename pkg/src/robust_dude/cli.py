"""Command-line front end.

Subcommands: simulate, denoise, evaluate, feasibility, example1, bounds, sweep.
Every run is driven by one JSON config and one explicit seed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    ChannelSet,
    DudeError,
    JointDistribution,
    LossMatrix,
    WindowedDenoiser,
    bsc,
    channel_new,
    hamming_loss,
    say_constant,
    say_what_you_see,
)
from .evaluation import (
    SourceChannelPair,
    SourceModel,
    benchmark_mu,
    conditional_expected_loss,
    lemma1_bound,
    lemma2_bound,
    lemma4_bound,
    realized_loss,
    simulate_pair,
    worst_case_loss,
)
from .feasibility import bsc_cover, default_slack, induced_input, trim
from .lp import SolverFailure
from .minimax import j_k_worst_case, solve_minimax
from .pipeline import PipelineConfig, default_window_order, denoise
from .empirical import empirical_joint

log = logging.getLogger("robust_dude")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ACCEPTANCE = 0, 2, 3, 4
RESULT_COLUMNS = [
    "experiment",
    "n",
    "k",
    "l",
    "denoiser",
    "realized_loss",
    "worst_case_loss",
    "benchmark_mu",
    "regret",
    "solver_value",
    "wall_time",
]


class ConfigInvalid(DudeError):
    pass


def fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


# --- configuration -------------------------------------------------------


def _channel_from_spec(spec, m: int):
    if isinstance(spec, (int, float)):
        return bsc(spec)
    if "bsc" in spec:
        return bsc(spec["bsc"])
    if spec.get("identity"):
        return channel_new(np.eye(m), label="identity")
    return channel_new(spec["matrix"], label=spec.get("label", ""))


def _source_from_spec(spec) -> SourceModel:
    kind = spec.get("kind", "iid")
    if kind == "iid":
        return SourceModel.iid(spec["p"])
    if kind == "markov":
        return SourceModel.markov(spec["transition"], spec.get("init"))
    raise ConfigInvalid(f"unknown source kind {kind!r}")


@dataclass
class ExperimentConfig:
    raw: dict
    m: int
    source: SourceModel
    channel: object
    delta: ChannelSet
    loss: LossMatrix
    n: int
    k: int
    l: int
    feas_eps: float | None
    seed: int
    apply_mode: str
    exact_law: bool
    experiment: str

    def resolved(self) -> dict:
        out = copy.deepcopy(self.raw)
        out.update(
            {
                "alphabet": self.m,
                "n": self.n,
                "k": self.k,
                "l": self.l,
                "feas_eps": self.feas_eps,
                "seed": self.seed,
                "apply_mode": self.apply_mode,
                "exact_law": self.exact_law,
                "experiment": self.experiment,
            }
        )
        return out


def load_config(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a config document; ``"k": "auto"`` resolves from n and m."""
    if "config" in raw and "files" in raw:  # a manifest written by simulate
        raw = raw["config"]
    raw = copy.deepcopy(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    try:
        m = int(raw.get("alphabet", 2))
        source = _source_from_spec(raw["source"])
        channel = _channel_from_spec(raw["channel"], m)
        unc = raw.get("uncertainty")
        if unc is None:
            delta = ChannelSet([channel])
        elif "bsc_interval" in unc:
            lo, hi = unc["bsc_interval"]
            delta = bsc_cover(lo, hi, unc.get("eta", 0.05))
        else:
            delta = ChannelSet([_channel_from_spec(c, m) for c in unc["channels"]])
        loss_spec = raw.get("loss", "hamming")
        loss = hamming_loss(m) if loss_spec == "hamming" else LossMatrix(loss_spec)
        n = int(raw["n"])
        k = raw.get("k", 0)
        k = default_window_order(n, m) if k == "auto" else int(k)
        l = raw.get("l")
        l = k if l is None else int(l)
        feas_eps = raw.get("feas_eps")
        if feas_eps is None:
            feas_eps = default_slack(n, l, m)
        seed = int(raw.get("seed", 0))
        mode = raw.get("apply_mode", "sample")
        PipelineConfig(k=k, l=l, apply_mode=mode)
    except (KeyError, TypeError, ValueError, DudeError) as exc:
        raise ConfigInvalid(f"invalid config: {exc!r}") from exc
    if source.m != m or channel.m != m or delta[0].m != m or loss.m != m:
        raise ConfigInvalid("alphabet sizes disagree")
    if n <= 2 * max(k, l):
        raise ConfigInvalid(f"n={n} too short for k={k}, l={l}")
    if not 0 <= seed < 2**64:
        raise ConfigInvalid("seed must be an unsigned 64-bit integer")
    return ExperimentConfig(
        raw=raw,
        m=m,
        source=source,
        channel=channel,
        delta=delta,
        loss=loss,
        n=n,
        k=k,
        l=l,
        feas_eps=float(feas_eps),
        seed=seed,
        apply_mode=mode,
        exact_law=bool(raw.get("exact_law", False)),
        experiment=str(raw.get("experiment", "run")),
    )


def output_law(cfg: ExperimentConfig, order: int) -> JointDistribution:
    """Exact law of `order` consecutive noisy symbols under the true pair."""
    src = cfg.source
    if src.kind == "iid":
        px = JointDistribution.iid(src.p, order)
    else:
        px = JointDistribution.markov(src.p, src.transition, order)
    return JointDistribution.through_channel(px, cfg.channel)


def feasible_pairs(cfg: ExperimentConfig, delta: ChannelSet | None = None) -> list[SourceChannelPair]:
    """One (source, channel) pair per channel consistent with the true output law.

    For iid sources each channel gets the iid input law it induces on the
    exact output marginal. A Markov source only pairs with the true channel,
    since other channels induce non-Markov inputs.
    """
    delta = cfg.delta if delta is None else delta
    pairs = []
    if cfg.source.kind == "iid":
        q = output_law(cfg, 1).tensor
        for ch in delta:
            p = induced_input(ch, q)
            if p.min() >= -1e-12:
                p = np.clip(p, 0, None)
                pairs.append(SourceChannelPair(SourceModel.iid(p / p.sum()), ch))
    if not pairs or cfg.source.kind != "iid":
        pairs = [SourceChannelPair(cfg.source, cfg.channel)]
    return pairs


# --- sequence files ------------------------------------------------------


def write_sequence(path: Path, seq, binary: bool = False) -> None:
    seq = np.asarray(seq, dtype=np.int64)
    if binary:
        path.write_bytes(seq.astype(np.uint8).tobytes())
    else:
        if seq.size and seq.max() > 9:
            raise ValueError("text sequence files hold single-digit symbols only")
        path.write_text("".join(map(str, seq.tolist())) + "\n")


def read_sequence(path: Path, binary: bool = False) -> np.ndarray:
    if binary:
        return np.frombuffer(path.read_bytes(), dtype=np.uint8).astype(np.int64)
    text = path.read_text().strip()
    return np.frombuffer(text.encode(), dtype=np.uint8).astype(np.int64) - ord("0")


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())


# --- commands ------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig, out: Path, binary: bool = False) -> dict:
    rng = np.random.default_rng(cfg.seed)
    x, z = simulate_pair(SourceChannelPair(cfg.source, cfg.channel), cfg.n, rng)
    ext = "bin" if binary else "txt"
    write_sequence(out / f"clean.{ext}", x, binary)
    write_sequence(out / f"noisy.{ext}", z, binary)
    manifest = {
        "version": __version__,
        "command": "simulate",
        "config": cfg.resolved(),
        "files": {"clean": f"clean.{ext}", "noisy": f"noisy.{ext}"},
        "noisy_ones_frequency": float(np.mean(z == 1)),
    }
    write_json(out / "manifest.json", manifest)
    log.info("simulated n=%d seed=%d into %s", cfg.n, cfg.seed, out)
    return manifest


def cmd_denoise(cfg: ExperimentConfig, noisy: Path, out: Path, binary: bool = False, threads: int = 1) -> dict:
    z = read_sequence(noisy, binary)
    pcfg = PipelineConfig(
        k=cfg.k, l=cfg.l, feas_eps=cfg.feas_eps, apply_mode=cfg.apply_mode, seed=cfg.seed, threads=threads
    )
    stats = trim_stats = None
    if cfg.exact_law:
        stats = output_law(cfg, 2 * cfg.k + 1)
        trim_stats = output_law(cfg, 2 * cfg.l + 1)
    log.info("denoising n=%d with k=%d l=%d feas_eps=%.3g", len(z), cfg.k, cfg.l, cfg.feas_eps)
    result = denoise(z, cfg.delta, pcfg, cfg.loss, stats=stats, trim_stats=trim_stats)
    ext = "bin" if binary else "txt"
    if result.mode == "distribution":
        np.savetxt(out / "reconstruction_dist.csv", result.reconstruction, fmt="%.12g", delimiter=",")
    else:
        write_sequence(out / f"reconstruction.{ext}", result.reconstruction, binary)
    write_json(out / "denoiser.json", result.solution.denoiser.to_dict())
    summary = result.summary()
    summary.update({"k": cfg.k, "l": cfg.l, "exact_law": cfg.exact_law, "n": len(z)})
    write_json(out / "summary.json", summary)
    return summary


def named_denoiser(name: str, m: int, k: int) -> WindowedDenoiser:
    if name == "say-what-you-see":
        return say_what_you_see(m, k)
    if name == "all-zeros":
        return say_constant(m, 0, k)
    return WindowedDenoiser.from_dict(json.loads(Path(name).read_text()))


def cmd_evaluate(
    cfg: ExperimentConfig,
    clean: Path,
    noisy: Path,
    denoisers: list[str],
    out: Path,
    binary: bool = False,
    solver_value: float | None = None,
    timing: bool = False,
) -> list[list]:
    x, z = read_sequence(clean, binary), read_sequence(noisy, binary)
    pairs = feasible_pairs(cfg)
    rows = []
    mu_cache = {}
    for name in denoisers:
        start = time.perf_counter()
        f = named_denoiser(name, cfg.m, cfg.k)
        worst, _ = worst_case_loss(pairs, z, f, cfg.loss)
        if f.k not in mu_cache:
            mu_cache[f.k] = benchmark_mu(pairs, z, f.k, cfg.loss)[0]
        mu = mu_cache[f.k]
        label = Path(name).stem if name.endswith(".json") else name
        wall = time.perf_counter() - start if timing else None
        rows.append(
            [cfg.experiment, len(z), f.k, cfg.l, label, realized_loss(x, z, f, cfg.loss), worst, mu, worst - mu,
             solver_value if label == "denoiser" else None, wall]
        )
    write_csv(out / "results.csv", RESULT_COLUMNS, rows)
    per_pair = [
        [cfg.experiment, Path(n).stem if n.endswith(".json") else n, p.label,
         conditional_expected_loss(p, z, named_denoiser(n, cfg.m, cfg.k), cfg.loss)]
        for n in denoisers
        for p in pairs
    ]
    write_csv(out / "pairs.csv", ["experiment", "denoiser", "pair", "conditional_loss"], per_pair)
    return rows


def cmd_feasibility(cfg: ExperimentConfig, noisy: Path, out: Path, binary: bool = False) -> dict:
    if cfg.exact_law:
        stats = output_law(cfg, 2 * cfg.l + 1)
    else:
        stats = empirical_joint(read_sequence(noisy, binary), cfg.l, cfg.m)
    report = trim(cfg.delta, stats, cfg.feas_eps).to_dict()
    write_json(out / "feasibility.json", report)
    return report


EXAMPLE1_CHECKS = [
    # name, expected, tolerance
    ("alpha_bsc_0.1", 0.1875, 1e-9),
    ("alpha_bsc_0.2", 0.0833, 5e-5),
    ("worst_case_say_what_you_see", 0.2, 1e-9),
    ("worst_case_all_zeros", 0.1875, 1e-9),
    ("minimax_value", 0.1428, 5e-3),
    ("gamma_star", 0.5101, 2e-2),
    ("d0", 0.0, 1e-6),
]


def example1_table() -> list[tuple[str, float, float, float, bool]]:
    q = JointDistribution.iid([0.75, 0.25], 1)
    delta = ChannelSet([bsc(0.1), bsc(0.2)])
    loss = hamming_loss(2)
    sol = solve_minimax(q, delta, 0, loss)
    got = {
        "alpha_bsc_0.1": float(induced_input(delta[0], q)[1]),
        "alpha_bsc_0.2": float(induced_input(delta[1], q)[1]),
        "worst_case_say_what_you_see": j_k_worst_case(q, delta, say_what_you_see(2), loss)[0],
        "worst_case_all_zeros": j_k_worst_case(q, delta, say_constant(2, 0), loss)[0],
        "minimax_value": sol.value,
        "gamma_star": float(sol.denoiser.table[1, 1]),
        "d0": float(sol.denoiser.table[0, 1]),
    }
    return [(name, got[name], exp, tol, abs(got[name] - exp) <= tol) for name, exp, tol in EXAMPLE1_CHECKS]


def cmd_example1(out: Path | None) -> bool:
    table = example1_table()
    rows = [[name, got, exp, tol, "PASS" if ok else "FAIL"] for name, got, exp, tol, ok in table]
    for r in rows:
        print(f"{r[0]:<30} {fmt(r[1]):>16} expected {fmt(r[2]):>8} +/- {r[3]:.0e}  {r[4]}")
    if out is not None:
        write_csv(out / "example1.csv", ["quantity", "value", "expected", "tolerance", "status"], rows)
    return all(ok for *_, ok in table)


def cmd_bounds(cfg: ExperimentConfig | None, out: Path, ns=None, ks=None, deltas=None, set_size: int | None = None):
    loss = cfg.loss if cfg else hamming_loss(2)
    inv = cfg.delta.max_inv_norm if cfg else bsc(0.1).inv_norm
    set_size = set_size or (len(cfg.delta) if cfg else 2)
    ns = ns or [10**3, 10**4, 10**5, 10**6]
    ks = ks or [0]
    deltas = deltas or [0.05, 0.1, 0.2]
    rows = []
    for k in ks:
        for d in deltas:
            for n in ns:
                rows.append(
                    [n, k, d, inv, lemma1_bound(n, k, d, loss, inv), lemma2_bound(n, k, d, loss, inv),
                     lemma4_bound(n, k, d, loss, inv, set_size)]
                )
    write_csv(out / "bounds.csv", ["n", "k", "delta", "inv_norm", "lemma1", "lemma2", "lemma4"], rows)
    return rows


def cmd_sweep(cfg: ExperimentConfig, axis: str, out: Path, values=None, trials: int = 5) -> list[list]:
    rows = []
    if axis == "gamma":
        # time-sharing between say-what-you-see and all-zeros, exact output law
        q = output_law(cfg, 1)
        values = values or [round(g, 2) for g in np.arange(0, 1.0001, 0.01)]
        for g in values:
            f = WindowedDenoiser.from_center_rule(0, g * np.eye(cfg.m) + (1 - g) * say_constant(cfg.m, 0).table)
            per = [j_k_worst_case(q, ChannelSet([ch]), f, cfg.loss)[0] for ch in cfg.delta]
            rows.append([g, max(per)] + per)
        header = ["gamma", "worst_case"] + [f"loss_{lab}" for lab in cfg.delta.labels]
    elif axis in ("n", "k"):
        values = values or ([10**3, 10**4, 10**5] if axis == "n" else [0, 1, 2])
        pair = SourceChannelPair(cfg.source, cfg.channel)
        for v in values:
            n = int(v) if axis == "n" else cfg.n
            k = cfg.k if axis == "n" else int(v)
            for trial in range(trials):
                rng = np.random.default_rng([cfg.seed, trial, n, k])
                x, z = simulate_pair(pair, n, rng)
                res = denoise(z, cfg.delta, PipelineConfig(k=k, l=k, feas_eps=cfg.feas_eps, seed=cfg.seed), cfg.loss)
                pairs = feasible_pairs(cfg, cfg.delta)
                f = res.solution.denoiser
                worst, _ = worst_case_loss(pairs, z, f, cfg.loss)
                mu, _ = benchmark_mu(pairs, z, k, cfg.loss)
                rows.append([n, k, trial, realized_loss(x, z, f, cfg.loss), worst, mu, worst - mu, res.solution.value])
        header = ["n", "k", "trial", "realized_loss", "worst_case_loss", "benchmark_mu", "regret", "solver_value"]
    else:
        raise ConfigInvalid(f"unknown sweep axis {axis!r}")
    write_csv(out / f"sweep_{axis}.csv", header, rows)
    return rows


# --- argument parsing ----------------------------------------------------


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON experiment config or simulate manifest")
    p.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    p.add_argument("--threads", type=int, default=1, help="worker cap for counting and sampling")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--feas-eps", type=float, help="feasibility slack override")
    p.add_argument("--exact-law", action="store_true", help="use the analytic output law instead of counts")
    p.add_argument("--binary", action="store_true", help="byte-per-symbol sequence files")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="robust-dude", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="sample clean and noisy sequences")
    p = sub.add_parser("denoise", parents=[common], help="run the minimax denoiser")
    p.add_argument("--noisy", type=Path)
    p = sub.add_parser("evaluate", parents=[common], help="loss table for one or more denoisers")
    p.add_argument("--clean", type=Path)
    p.add_argument("--noisy", type=Path)
    p.add_argument("--denoiser", action="append", help="say-what-you-see, all-zeros, or a denoiser JSON file")
    p.add_argument("--timing", action="store_true", help="fill the wall_time column")
    p = sub.add_parser("feasibility", parents=[common], help="trim report for a noisy file")
    p.add_argument("--noisy", type=Path)
    sub.add_parser("example1", parents=[common], help="check the two-BSC golden numbers")
    p = sub.add_parser("bounds", parents=[common], help="tabulate concentration bounds")
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--delta", type=float, nargs="+")
    p = sub.add_parser("sweep", parents=[common], help="vary n, k or gamma and write CSV")
    p.add_argument("axis", choices=["n", "k", "gamma"])
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--trials", type=int, default=5)
    return parser


def _load(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigInvalid("--config is required for this command")
    try:
        raw = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config: {exc}") from exc
    overrides = {"seed": args.seed, "feas_eps": args.feas_eps}
    if args.exact_law:
        overrides["exact_law"] = True
    return load_config(raw, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "example1":
            return EXIT_OK if cmd_example1(out) else EXIT_ACCEPTANCE
        if args.command == "bounds":
            cfg = _load(args) if args.config else None
            cmd_bounds(cfg, out, args.n, args.k, args.delta)
            return EXIT_OK
        cfg = _load(args)
        log.info("resolved k=%d l=%d", cfg.k, cfg.l)
        ext = "bin" if args.binary else "txt"
        if args.command == "simulate":
            cmd_simulate(cfg, out, args.binary)
        elif args.command == "denoise":
            summary = cmd_denoise(cfg, args.noisy or out / f"noisy.{ext}", out, args.binary, args.threads)
            print(json.dumps({k: summary[k] for k in ("k", "l", "value")}))
        elif args.command == "evaluate":
            solver_value = None
            summary_path = out / "summary.json"
            if summary_path.exists():
                solver_value = json.loads(summary_path.read_text())["value"]
            names = args.denoiser or [str(out / "denoiser.json")]
            names = [str(Path(n)) if n.endswith(".json") else n for n in names]
            cmd_evaluate(
                cfg, args.clean or out / f"clean.{ext}", args.noisy or out / f"noisy.{ext}", names, out,
                args.binary, solver_value, args.timing,
            )
        elif args.command == "feasibility":
            cmd_feasibility(cfg, args.noisy or out / f"noisy.{ext}", out, args.binary)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.axis, out, args.values, args.trials)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
