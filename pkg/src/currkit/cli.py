"""Single entry point wiring corpus, influence, curricula, and analysis together.

One process, no daemon: the consumers are batch pipelines and scripts. Every
subcommand is deterministic given identical inputs and seeds (byte-identical
outputs) and exits nonzero on any validation failure. ``--config`` points at a
JSON pipeline config whose values fill in unset flags; the CURRKIT_OUT_DIR
environment variable sets the default output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import analysis, corpus as corpus_mod, curricula, gradstore, heuristics, influence

DEFAULTS = {
    "seed": 0,
    "budget": curricula.DEFAULT_BUDGET,
    "epochs": curricula.DEFAULT_EPOCHS,
    "block_size": curricula.DEFAULT_BLOCK_SIZE,
    "segments": curricula.DEFAULT_SEGMENTS,
    "keep_fraction": curricula.DEFAULT_KEEP_FRACTION,
    "epochs_per_stage": curricula.DEFAULT_EPOCHS_PER_STAGE,
    "mu": 0.0,
    "sigma": 1.0,
    "window": 5,
    "alpha": 1.0,
    "n_segments": analysis.DEFAULT_SEGMENTS,
    "target_len": 100,
}

_ERRORS = (
    corpus_mod.CorpusError,
    gradstore.GradStoreError,
    influence.InfluenceError,
    curricula.CurriculumError,
    analysis.AnalysisError,
    heuristics.HeuristicsError,
)


@dataclass
class PipelineConfig:
    """File-backed defaults for the CLI; round-trips losslessly through JSON."""

    corpus: str | None = None
    dumps: str | None = None
    out_dir: str | None = None
    seed: int = DEFAULTS["seed"]
    budget: int = DEFAULTS["budget"]
    strategy: str | None = None
    direction: str | None = None
    epochs: int = DEFAULTS["epochs"]
    block_size: int = DEFAULTS["block_size"]
    segments: int = DEFAULTS["segments"]
    keep_fraction: float = DEFAULTS["keep_fraction"]
    epochs_per_stage: int = DEFAULTS["epochs_per_stage"]
    mu: float = DEFAULTS["mu"]
    sigma: float = DEFAULTS["sigma"]
    include_self: bool = True
    n_segments: int = DEFAULTS["n_segments"]
    analyses: list[str] = field(default_factory=list)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(asdict(self), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "config", None):
        return PipelineConfig.from_file(args.config)
    return PipelineConfig()


def _get(args: argparse.Namespace, cfg: PipelineConfig, name: str):
    """Flag if given, else config value, else built-in default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    cfg_value = getattr(cfg, name, None)
    if cfg_value is not None:
        return cfg_value
    return DEFAULTS.get(name)


def _out_dir(args: argparse.Namespace, cfg: PipelineConfig) -> Path:
    out = getattr(args, "out", None) or cfg.out_dir or os.environ.get("CURRKIT_OUT_DIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require(value, flag: str):
    if value is None:
        raise SystemExit(f"error: {flag} is required (flag or config)")
    return value


# ---------------------------------------------------------------------------
# subcommands

def cmd_corpus(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    path = _require(getattr(args, "manifest", None) or cfg.corpus, "corpus manifest path")
    corp = corpus_mod.load_corpus(path)
    if args.corpus_action == "validate":
        print(f"corpus {corp.name}: {len(corp)} documents, {corp.total_words} words")
        for stage, words in sorted(corp.stage_words().items()):
            print(f"  {stage}: {words} words")
        return 0
    out = _require(args.out_file, "--out")
    if args.corpus_action == "synth-equitoken":
        target = int(_get(args, cfg, "target_len"))
        result = corpus_mod.synth_equitoken(corp, target)
        dropped = corp.total_words - result.total_words
        print(
            f"synthesized {len(result)} documents of {target} words "
            f"({dropped} words dropped)"
        )
    else:  # stratify
        words = _require(args.words_per_stage, "--words-per-stage")
        seed = int(_get(args, cfg, "seed"))
        result = corpus_mod.stratify(corp, words, seed)
        print(f"stratified to {len(result)} documents, {result.total_words} words")
        for stage, total in sorted(result.stage_words().items()):
            print(f"  {stage}: {total} words")
    corpus_mod.save_corpus(result, out)
    print(f"wrote {out}")
    return 0


def cmd_scores(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    corp = corpus_mod.load_corpus(_require(args.corpus or cfg.corpus, "--corpus"))
    window = int(_get(args, cfg, "window"))
    alpha = float(_get(args, cfg, "alpha"))
    table = heuristics.score_corpus(corp, window=window, alpha=alpha)
    out_dir = _out_dir(args, cfg)
    out = Path(args.out_file) if args.out_file else out_dir / "scores.tsv"
    heuristics.write_score_table(table, out)
    print(f"scored {len(table)} documents (window={window}, alpha={alpha}) -> {out}")
    return 0


def _load_eta(path: str | None, T: int) -> tuple[float, ...] | None:
    if path is None:
        return None
    values = [float(x) for x in Path(path).read_text(encoding="utf-8").split()]
    if len(values) != T:
        raise gradstore.GradStoreError(f"eta file has {len(values)} weights for {T} checkpoints")
    return tuple(values)


def cmd_influence(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    dumps_dir = _require(args.dumps or cfg.dumps, "--dumps")
    include_self = cfg.include_self if args.exclude_self is None else not args.exclude_self
    cset = gradstore.read_checkpoint_set(dumps_dir)
    if args.eta:
        cset = gradstore.CheckpointSet(cset.checkpoints, _load_eta(args.eta, cset.T))
    phi = influence.influence_matrix(cset, include_self=include_self)
    out_dir = _out_dir(args, cfg)
    influence.save_influence(phi, out_dir / "influence.imx")
    influence.export_influence_text(phi, out_dir / "influence.tsv")
    zero_rows = sum(
        int(np.count_nonzero(np.linalg.norm(ck.rows, axis=1) == 0.0)) for ck in cset.checkpoints
    )
    print(
        f"influence matrix: {phi.n_documents} documents x {phi.n_checkpoints} checkpoints "
        f"(self term {'included' if include_self else 'excluded'}, {zero_rows} zero rows)"
    )
    if args.filter:
        if args.filter != "lognorm":
            raise SystemExit(f"error: unknown filter {args.filter!r}")
        mu = float(_get(args, cfg, "mu"))
        sigma = float(_get(args, cfg, "sigma"))
        filt = influence.make_lognorm_filter(phi.n_checkpoints, mu=mu, sigma=sigma)
        conv = influence.convolve(phi, filt)
        influence.save_influence(conv, out_dir / "influence_conv.imx")
        influence.export_influence_text(conv, out_dir / "influence_conv.tsv")
        print(f"convolved matrix written (lognormal mu={mu} sigma={sigma})")
    print(f"wrote {out_dir / 'influence.imx'}")
    return 0


_FAMILIES = {
    "sorted": ("sorted_desc", "sorted_asc"),
    "block": ("block_desc", "block_asc"),
    "conv_block": ("conv_block_desc", "conv_block_asc"),
    "segments": ("segments_desc", "segments_asc"),
}


def _resolve_strategy(name: str, direction: str | None) -> str:
    if name in curricula.STRATEGIES:
        return name
    if name in _FAMILIES:
        if direction not in ("asc", "desc"):
            raise SystemExit(f"error: strategy family {name!r} needs --direction asc|desc")
        return _FAMILIES[name][0 if direction == "desc" else 1]
    raise SystemExit(
        f"error: unknown strategy {name!r}; choose from {', '.join(curricula.STRATEGIES)} "
        f"or a family {', '.join(_FAMILIES)} with --direction"
    )


def cmd_build(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    corp = corpus_mod.load_corpus(_require(args.corpus or cfg.corpus, "--corpus"))
    seed = int(_get(args, cfg, "seed"))
    budget = int(_get(args, cfg, "budget"))
    out_dir = _out_dir(args, cfg)

    phi = influence.load_influence(args.phi) if args.phi else None
    phi_conv = influence.load_influence(args.phi_conv) if args.phi_conv else None
    table = heuristics.load_score_table(args.scores) if args.scores else None
    agg = influence.aggregate(phi) if phi is not None else None

    if args.all:
        names = list(curricula.STRATEGIES)
    else:
        raw = _require(args.strategy or cfg.strategy, "--strategy")
        names = [_resolve_strategy(raw, args.direction or cfg.direction)]

    mu = float(_get(args, cfg, "mu"))
    sigma = float(_get(args, cfg, "sigma"))
    needs_conv = [n for n in names if n.startswith("conv_block")]
    if needs_conv and phi_conv is None and phi is not None:
        filt = influence.make_lognorm_filter(phi.n_checkpoints, mu=mu, sigma=sigma)
        phi_conv = influence.convolve(phi, filt)

    report_lines: list[str] = []
    failures = 0
    for name in names:
        spec = curricula.StrategySpec(
            strategy=name,
            epochs=int(_get(args, cfg, "epochs")),
            block_size=int(_get(args, cfg, "block_size")),
            segments=int(_get(args, cfg, "segments")),
            keep_fraction=float(_get(args, cfg, "keep_fraction")),
            epochs_per_stage=int(_get(args, cfg, "epochs_per_stage")),
            mu=mu,
            sigma=sigma,
            single_shuffle=bool(args.single_shuffle),
            start_high=not args.start_low,
        )
        manifest = curricula.build_strategy(
            corp, spec, seed, budget, phi=phi, phi_conv=phi_conv, agg=agg, heuristic_scores=table
        )
        curricula.save_manifest(manifest, out_dir / f"{name}.cman")
        if args.text:
            curricula.export_manifest_text(manifest, out_dir / f"{name}.txt")
        report = curricula.validate_manifest(manifest, corp)
        status = "ok" if report.ok else "FAIL"
        line = (
            f"{name}: {status} ({manifest.n_epochs} epochs, {manifest.total_words} words"
            f"{', truncated' if manifest.truncated else ''})"
        )
        report_lines.append(line)
        report_lines.extend(f"  violation: {v}" for v in report.violations)
        report_lines.extend(f"  warning: {w}" for w in report.warnings)
        print(line)
        failures += 0 if report.ok else 1
    (out_dir / "build_report.txt").write_text("\n".join(report_lines) + "\n", encoding="utf-8")
    return 1 if failures else 0


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    corp = corpus_mod.load_corpus(_require(args.corpus or cfg.corpus, "--corpus"))
    out_dir = _out_dir(args, cfg)
    manifests = [curricula.load_manifest(p) for p in args.manifest or []]
    names: list[str] = []
    for m, p in zip(manifests, args.manifest or []):
        name = m.strategy if m.strategy not in names else Path(p).stem
        names.append(name)
    selected = set(args.analyses or cfg.analyses or [])
    if not selected:
        selected = {"composition", "jsd", "tau"} if manifests else set()
    n_segments = int(_get(args, cfg, "n_segments"))
    by_words = not args.count_balanced

    report: dict = {"corpus": corp.name, "manifests": names}
    if manifests and {"composition", "jsd"} & selected:
        n_segments = min(n_segments, *(sum(len(ep) for ep in m.epochs) for m in manifests))
        timelines = [
            analysis.composition_timeline(m, corp, n_segments=n_segments, by_words=by_words)
            for m in manifests
        ]
        if "composition" in selected:
            report["composition"] = {
                name: tl.shares.tolist() for name, tl in zip(names, timelines)
            }
            report["composition_segments"] = n_segments
        if "jsd" in selected and len(manifests) >= 2:
            jsd: dict[str, float] = {}
            for i in range(len(manifests)):
                for j in range(i + 1, len(manifests)):
                    value = analysis.jsd_mean(timelines[i], timelines[j])
                    jsd[f"{names[i]}|{names[j]}"] = value
                    print(f"jsd {names[i]} vs {names[j]}: {value:.6f} nats")
            report["jsd"] = jsd
    if "tau" in selected and len(manifests) >= 2:
        tau: dict[str, dict] = {}
        for i in range(len(manifests)):
            for j in range(i + 1, len(manifests)):
                per_epoch, mean = analysis.manifest_tau_b(manifests[i], manifests[j])
                key = f"{names[i]}|{names[j]}"
                tau[key] = {
                    "per_epoch": ["undefined" if t is None else t for t in per_epoch],
                    "mean": "undefined" if mean is None else mean,
                }
                shown = "undefined" if mean is None else f"{mean:.4f}"
                print(f"tau {names[i]} vs {names[j]}: mean {shown} over {len(per_epoch)} epochs")
        report["tau"] = tau
    if args.loss_log:
        series = analysis.load_loss_log(args.loss_log)
        ratios = analysis.loss_ratio(series)
        analysis.save_loss_ratio(series, ratios, out_dir / "loss_ratio.tsv")
        report["loss_ratio"] = {
            "steps": list(series.steps),
            "ratio": [float(r) for r in ratios],
            "max": float(ratios.max()),
        }
        print(f"loss ratio over {len(series.steps)} steps, max {ratios.max():.4f}")

    report_path = out_dir / (args.report or "report.json")
    report_path.write_text(json.dumps(report, sort_keys=True) + "\n", encoding="utf-8")
    (out_dir / (report_path.stem + ".txt")).write_text(_text_report(report), encoding="utf-8")
    print(f"wrote {report_path}")
    return 0


def _text_report(report: dict) -> str:
    """Plain-text table rendering of the structured report."""
    lines = [f"corpus: {report['corpus']}", f"manifests: {', '.join(report['manifests']) or '-'}"]
    if "jsd" in report:
        lines += ["", "mean JSD (nats)", "pair\tvalue"]
        lines += [f"{pair}\t{value:.6f}" for pair, value in sorted(report["jsd"].items())]
    if "tau" in report:
        lines += ["", "Kendall tau-b", "pair\tmean\tper-epoch"]
        for pair, entry in sorted(report["tau"].items()):
            mean = entry["mean"] if isinstance(entry["mean"], str) else f"{entry['mean']:.4f}"
            cells = "\t".join(
                t if isinstance(t, str) else f"{t:.4f}" for t in entry["per_epoch"]
            )
            lines.append(f"{pair}\t{mean}\t{cells}")
    if "loss_ratio" in report:
        lr = report["loss_ratio"]
        lines += ["", f"loss ratio: {len(lr['steps'])} steps, max {lr['max']:.6f}"]
    return "\n".join(lines) + "\n"


def cmd_plot(args: argparse.Namespace) -> int:
    from . import plots  # deferred: matplotlib is heavy

    cfg = _load_config(args)
    corp = corpus_mod.load_corpus(_require(args.corpus or cfg.corpus, "--corpus"))
    out_dir = _out_dir(args, cfg)
    manifests = [curricula.load_manifest(p) for p in args.manifest or []]
    made = []
    if manifests:
        n_segments = int(_get(args, cfg, "n_segments"))
        n_segments = min(n_segments, *(sum(len(ep) for ep in m.epochs) for m in manifests))
        timelines = [
            analysis.composition_timeline(m, corp, n_segments=n_segments) for m in manifests
        ]
        for m, tl in zip(manifests, timelines):
            out = out_dir / f"composition_{m.strategy}.png"
            plots.plot_composition(tl, m.strategy, out)
            made.append(out)
        if len(manifests) >= 2:
            names = [m.strategy for m in manifests]
            mat = np.zeros((len(names), len(names)))
            for i in range(len(names)):
                for j in range(len(names)):
                    if i != j:
                        mat[i, j] = analysis.jsd_mean(timelines[i], timelines[j])
            out = out_dir / "jsd_matrix.png"
            plots.plot_jsd_table(names, mat, out)
            made.append(out)
    if args.loss_log:
        series = analysis.load_loss_log(args.loss_log)
        out = out_dir / "loss.png"
        plots.plot_loss(series, analysis.loss_ratio(series), out)
        made.append(out)
    for path in made:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON pipeline config supplying defaults")
    p.add_argument("--out", help="output directory (default: CURRKIT_OUT_DIR or .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="currkit",
        description="Compile and analyze training-data curricula from gradient influence scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus", help="load, validate, and derive corpora")
    ps = p.add_subparsers(dest="corpus_action", required=True)
    for action, extra in (
        ("validate", ()),
        ("synth-equitoken", ("--target-len", "--out-file")),
        ("stratify", ("--words-per-stage", "--seed", "--out-file")),
    ):
        q = ps.add_parser(action)
        q.add_argument("manifest", help="corpus manifest path")
        _add_common(q)
        if "--target-len" in extra:
            q.add_argument("--target-len", type=int, help="synthetic document length in words (default 100)")
        if "--words-per-stage" in extra:
            q.add_argument("--words-per-stage", type=int, help="word budget per stage")
            q.add_argument("--seed", type=int, help="selection shuffle seed (default 0)")
        if "--out-file" in extra:
            q.add_argument("--out-file", required=True, help="output corpus manifest")
        q.set_defaults(func=cmd_corpus)

    p = sub.add_parser("scores", help="heuristic difficulty score table (mattr, unigram ppl)")
    p.add_argument("--corpus", help="corpus manifest path")
    p.add_argument("--window", type=int, help="type-token ratio window (default 5)")
    p.add_argument("--alpha", type=float, help="unigram smoothing (default 1.0)")
    p.add_argument("--out-file", help="score table path (default <out>/scores.tsv)")
    _add_common(p)
    p.set_defaults(func=cmd_scores)

    p = sub.add_parser("influence", help="influence matrix from gradient dumps")
    p.add_argument("--dumps", help="directory of per-checkpoint .gdmp files")
    p.add_argument(
        "--exclude-self",
        action="store_true",
        default=None,
        help="average over the other documents only (default: include the self term)",
    )
    p.add_argument("--filter", choices=["lognorm"], help="also write a convolved matrix")
    p.add_argument("--mu", type=float, help="lognormal location (default 0)")
    p.add_argument("--sigma", type=float, help="lognormal scale (default 1)")
    p.add_argument("--eta", help="optional per-checkpoint weight file (whitespace-separated)")
    _add_common(p)
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("build", help="compile curriculum manifests")
    p.add_argument("--corpus", help="corpus manifest path")
    p.add_argument("--strategy", help="strategy name or family (family needs --direction)")
    p.add_argument("--direction", choices=["asc", "desc"])
    p.add_argument("--all", action="store_true", help="build all 14 strategies with one seed")
    p.add_argument("--seed", type=int, help="random stream seed (default 0)")
    p.add_argument("--budget", type=int, help="max words across the curriculum (default 100000000)")
    p.add_argument("--epochs", type=int, help="passes over the data (default 10)")
    p.add_argument("--block-size", type=int, help="shuffle-block size (default 1000)")
    p.add_argument("--segments", type=int, help="segment count for segment strategies (default 10)")
    p.add_argument("--keep-fraction", type=float, help="retained fraction for top_half (default 0.5)")
    p.add_argument("--epochs-per-stage", type=int, help="epochs per stage for source_stages (default 2)")
    p.add_argument("--mu", type=float, help="lognormal location for conv strategies (default 0)")
    p.add_argument("--sigma", type=float, help="lognormal scale for conv strategies (default 1)")
    p.add_argument("--phi", help="influence matrix file (.imx)")
    p.add_argument("--phi-conv", help="convolved influence matrix file (.imx)")
    p.add_argument("--scores", help="heuristic score table (.tsv)")
    p.add_argument("--single-shuffle", action="store_true", help="random: reuse one shuffle each pass")
    p.add_argument("--start-low", action="store_true", help="alternating: begin at the lowest-influence segment")
    p.add_argument("--text", action="store_true", help="also write plain-text manifests")
    _add_common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("analyze", help="composition, divergence, rank-correlation, loss-ratio reports")
    p.add_argument("--corpus", help="corpus manifest path")
    p.add_argument("--manifest", action="append", help="curriculum manifest (.cman); repeatable")
    p.add_argument(
        "--analyses",
        action="append",
        choices=["composition", "jsd", "tau"],
        help="which manifest analyses to run (default: all)",
    )
    p.add_argument("--n-segments", type=int, help="timeline segments (default 1000, capped at doc count)")
    p.add_argument(
        "--count-balanced",
        action="store_true",
        help="balance timeline segments by document count instead of words",
    )
    p.add_argument("--loss-log", help="'step loss' text log for the loss-ratio series")
    p.add_argument("--report", help="report file name (default report.json)")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plot", help="static charts: composition stacks, JSD table, loss curves")
    p.add_argument("--corpus", help="corpus manifest path")
    p.add_argument("--manifest", action="append", help="curriculum manifest (.cman); repeatable")
    p.add_argument("--n-segments", type=int, help="timeline segments (default 1000)")
    p.add_argument("--loss-log", help="'step loss' text log")
    _add_common(p)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
