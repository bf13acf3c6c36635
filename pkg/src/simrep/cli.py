"""Command-line pipeline: generate -> train -> consensus -> analyze.

Every subcommand reads one JSON run configuration, executes the matching
library operation, writes its artifacts (containers, CSV, SVG, manifest)
under --out, and prints a one-line summary. Exit codes: 0 success, 1
validation/usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from . import contrastive, embedding
from .io import report
from .io.containers import ContainerError, DatasetContainer, load_model, save_model
from .io.runconfig import FAMILY_TAGS, ConfigError, RunConfig, load_config
from .nn import grad_check, standard_check_specs
from .simulators import (
    ABMParams,
    FluxNetwork,
    LVParams,
    gen_testdata,
    load_toy_network,
    monte_carlo,
)

GRADCHECK_TOL = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract is exit 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="simrep", description=__doc__)
    sub = p.add_subparsers(dest="command", metavar="command")
    commands = {
        "generate": "sample parameters and simulate a training dataset",
        "train": "train a contrastive ensemble on a dataset container",
        "consensus": "pairwise neighborhood-agreement scores for an ensemble",
        "sweep": "single-parameter sweep (lv/abm) or flux-bound sweep (fba)",
        "knockout": "per-subsystem reaction knockout distances (fba)",
        "sensitivity": "local one-at-a-time sensitivity (lv/abm)",
        "cluster": "hierarchical clustering of a dataset with cluster profiles",
        "testdata": "generate the synthetic 2-d reconstruction datasets",
        "gradcheck": "verify backpropagation against finite differences",
    }
    for name, help_text in commands.items():
        sp = sub.add_parser(name, help=help_text)
        if name != "gradcheck":
            sp.add_argument("--config", required=True, help="run configuration JSON")
        sp.add_argument("--out", default="runs", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--format", choices=("csv", "svg", "both"), default="both")
        if name in ("train", "consensus", "cluster"):
            sp.add_argument("--data", default=None, help="dataset container path")
        if name in ("consensus", "sweep", "knockout", "sensitivity", "cluster"):
            sp.add_argument("--model", default=None, help="model container path")
    return p


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _network(cfg: RunConfig) -> FluxNetwork:
    return FluxNetwork.load(cfg.fba_network) if cfg.fba_network else load_toy_network()


def _dataset_path(args, out: Path) -> Path:
    return Path(args.data) if getattr(args, "data", None) else out / "dataset.simrep"


def _model_path(args, out: Path) -> Path:
    return Path(args.model) if getattr(args, "model", None) else out / "model.simrep"


def _base_params(cfg: RunConfig) -> np.ndarray:
    if cfg.family == "lv":
        return LVParams().to_vector()
    return (cfg.abm_base or ABMParams()).rates_vector()


def _sweep_values(cfg: RunConfig, base_value: float) -> np.ndarray:
    opts = cfg.analysis.get("sweep", {})
    lo, hi = float(opts.get("lo", 0.5)), float(opts.get("hi", 2.0))
    n = int(opts.get("n_values", 21))
    factors = np.geomspace(lo, hi, n)
    factors[np.argmin(np.abs(factors - 1.0))] = 1.0
    return factors * base_value


def cmd_generate(args) -> str:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = None
    if cfg.family == "fba":
        base = _network(cfg)
    elif cfg.family == "abm":
        base = cfg.abm_base or ABMParams()
    result = monte_carlo(
        cfg.family, cfg.effective_ranges(), cfg.n_samples, cfg.seed,
        replicates=cfg.replicates if cfg.family == "abm" else 1,
        base=base, lv_opts=cfg.lv_opts if cfg.family == "lv" else None,
    )
    if not result.outputs:
        raise RuntimeError("every simulation failed; nothing to write")
    container = DatasetContainer.from_outputs(result.outputs, result.param_names)
    path = out / "dataset.simrep"
    container.save(path)
    report.write_manifest(out, "generate", cfg.config_hash, [cfg.seed], [path])
    return (f"generate: {container.count} samples ({len(result.failures)} failed), "
            f"family {cfg.family}, seed {cfg.seed} -> {path}")


def cmd_testdata(args) -> str:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kind = str(cfg.testdata.get("kind", "A"))
    n = int(cfg.testdata.get("n", 2000))
    points, outputs = gen_testdata(kind, n, cfg.seed)
    container = DatasetContainer.from_outputs(outputs, ["x", "y"])
    path = out / f"testdata_{kind}.simrep"
    container.save(path)
    artifacts = [path]
    if args.format in ("csv", "both"):
        csv_path = out / f"testdata_{kind}_points.csv"
        report.emit_csv(csv_path, ["index", "x", "y"],
                        [(i, points[i, 0], points[i, 1]) for i in range(n)])
        artifacts.append(csv_path)
    report.write_manifest(out, f"testdata_{kind}", cfg.config_hash, [cfg.seed], artifacts)
    return f"testdata: kind {kind}, {n} samples, seed {cfg.seed} -> {path}"


def cmd_train(args) -> str:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    container = DatasetContainer.load(_dataset_path(args, out))
    dataset = container.outputs()
    spec = cfg.encoder or contrastive.default_spec(
        container.shape_tag, container.dims, cfg.output_dim
    )
    policy = cfg.augment or contrastive.default_policy(container.shape_tag)
    model = contrastive.train_ensemble(dataset, spec, cfg.train, policy, cfg.seed)
    path = out / "model.simrep"
    save_model(model, path, config_hash=cfg.config_hash)
    report.write_manifest(out, "train", cfg.config_hash,
                          list(model.member_seeds), [path])
    final = ", ".join(f"{c[-1]:.4f}" for c in model.loss_curves)
    return (f"train: {model.size} members x {cfg.train.epochs} epochs on "
            f"{len(dataset)} samples; final losses [{final}] -> {path}")


def cmd_consensus(args) -> str:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(_model_path(args, out))
    container = DatasetContainer.load(_dataset_path(args, out))
    dataset = container.outputs()
    n_values = [int(v) for v in cfg.analysis.get("consensus", {}).get(
        "n_values", [5, 10, 20, 50])]
    n_values = [v for v in n_values if v < len(dataset)]
    if not n_values:
        raise RuntimeError(f"no valid neighborhood sizes for {len(dataset)} samples")
    reports = embedding.consensus_ensemble(model, dataset, n_values)

    artifacts = []
    if args.format in ("csv", "both"):
        rows = []
        for rep in reports:
            m = rep.pairwise.shape[0]
            for i in range(m):
                for j in range(i + 1, m):
                    rows.append((rep.n, i, j, rep.pairwise[i, j]))
            rows.append((rep.n, "ensemble", "ensemble", rep.ensemble_score))
        path = out / "consensus.csv"
        report.emit_csv(path, ["n", "member_a", "member_b", "score"], rows)
        artifacts.append(path)
    if args.format in ("svg", "both"):
        iu = np.triu_indices(model.size, k=1)
        path = out / "consensus.svg"
        report.svg_consensus(
            path, [r.n for r in reports], [r.ensemble_score for r in reports],
            pair_min=[r.pairwise[iu].min() for r in reports],
            pair_max=[r.pairwise[iu].max() for r in reports],
        )
        artifacts.append(path)
    report.write_manifest(out, "consensus", cfg.config_hash, [cfg.seed], artifacts)
    scores = ", ".join(f"n={r.n}: {r.ensemble_score:.3f}" for r in reports)
    return f"consensus: {scores}"


def _emit_sweep(out: Path, fmt: str, result, xlabel: str):
    artifacts = []
    means = result.mean_distances()
    stds = np.array([s.std if s is not None else np.nan for s in result.summaries])
    pairs = [s.n_pairs if s is not None else 0 for s in result.summaries]
    base_idx = int(np.argmin(np.abs(result.values - result.base_value)))
    if fmt in ("csv", "both"):
        rows = [
            (v, means[i], stds[i], pairs[i], int(i == base_idx),
             "ok" if result.summaries[i] is not None else "failed")
            for i, v in enumerate(result.values)
        ]
        path = out / "sweep.csv"
        report.emit_csv(path, ["value", "mean", "std", "n_pairs", "is_base", "status"], rows)
        artifacts.append(path)
    if fmt in ("svg", "both"):
        path = out / "sweep.svg"
        report.svg_line_band(path, result.values, means, stds, base_index=base_idx,
                             title=f"sweep of {result.parameter}", xlabel=xlabel)
        artifacts.append(path)
    return artifacts


def cmd_sweep(args) -> str:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(_model_path(args, out))

    if cfg.family == "fba":
        opts = cfg.analysis.get("flux_bound_sweep", {})
        net = _network(cfg)
        reaction = opts.get("reaction", "EX_A")
        if "values" in opts:
            values = np.asarray(opts["values"], dtype=float)
        else:
            values = np.linspace(float(opts.get("from", 0.0)),
                                 float(opts.get("to", -20.0)),
                                 int(opts.get("n_values", 21)))
        result = an.flux_bound_sweep(net, model, reaction, values)
        plateau = an.plateau_length(result.outputs)
        artifacts = _emit_sweep(out, args.format, result, "lower bound")
        report.write_manifest(out, "sweep", cfg.config_hash, [cfg.seed], artifacts)
        return (f"sweep: {reaction} lower bound over {len(values)} values, "
                f"{len(result.failures)} infeasible, trailing plateau {plateau}")

    opts = cfg.analysis.get("sweep", {})
    base_params = _base_params(cfg)
    index = int(opts.get("param_index", 0))
    values = _sweep_values(cfg, base_params[index])
    result = an.parameter_sweep(
        cfg.family, model, base_params, index, values,
        replicates=int(opts.get("replicates", max(cfg.replicates, 2))),
        seed=cfg.seed,
        base=cfg.abm_base if cfg.family == "abm" else None,
        lv_opts=cfg.lv_opts if cfg.family == "lv" else None,
    )
    artifacts = _emit_sweep(out, args.format, result, f"value of {result.parameter}")
    report.write_manifest(out, "sweep", cfg.config_hash, [cfg.seed], artifacts)
    return (f"sweep: {result.parameter} over {len(values)} values, "
            f"{len(result.failures)} failures")


def cmd_knockout(args) -> str:
    cfg = _load(args)
    if cfg.family != "fba":
        raise ConfigError("knockout analysis requires family 'fba'")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(_model_path(args, out))
    net = _network(cfg)
    result = an.knockout_sweep(net, model)

    artifacts = []
    if args.format in ("csv", "both"):
        rows = []
        for r in result.records:
            mean = r.summary.mean if r.summary else ""
            std = r.summary.std if r.summary else ""
            rows.append(("reaction", r.reaction, r.subsystem, mean, std, 1, r.status))
        for name, (mean, std, count) in result.subsystem_stats.items():
            rows.append(("subsystem", name, name, mean, std, count, "ok"))
        for name in result.excluded_subsystems:
            rows.append(("subsystem", name, name, "", "", 0, "excluded"))
        path = out / "knockout.csv"
        report.emit_csv(path, ["row_type", "name", "subsystem", "mean_distance",
                               "std_distance", "n", "status"], rows)
        artifacts.append(path)
    if args.format in ("svg", "both"):
        names = list(result.subsystem_stats)
        path = out / "knockout.svg"
        report.svg_bars(path, names,
                        [result.subsystem_stats[n][0] for n in names],
                        [result.subsystem_stats[n][1] for n in names],
                        title="knockout distance by subsystem")
        artifacts.append(path)
    report.write_manifest(out, "knockout", cfg.config_hash, [cfg.seed], artifacts)
    top = result.top_subsystem()
    return (f"knockout: {len(result.records)} reactions, top subsystem {top}, "
            f"{len(result.excluded_subsystems)} excluded subsystems")


def cmd_sensitivity(args) -> str:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(_model_path(args, out))
    opts = cfg.analysis.get("sensitivity", {})
    result = an.local_sensitivity(
        cfg.family, model, _base_params(cfg),
        delta=float(opts.get("delta", 0.10)),
        base=cfg.abm_base if cfg.family == "abm" else None,
        lv_opts=cfg.lv_opts if cfg.family == "lv" else None,
        replicates=int(opts.get("replicates", max(cfg.replicates, 2))),
        seed=cfg.seed,
    )
    artifacts = []
    if args.format in ("csv", "both"):
        rows = [
            (nm, result.raw_projected[i], result.raw_projected_std[i],
             result.raw_specified[i], result.norm_projected[i],
             result.norm_specified[i], result.rank_projected[i],
             result.rank_specified[i])
            for i, nm in enumerate(result.param_names)
        ]
        path = out / "sensitivity.csv"
        report.emit_csv(path, ["parameter", "raw_projected_mean", "raw_projected_std",
                               "raw_specified", "norm_projected", "norm_specified",
                               "rank_projected", "rank_specified"], rows)
        artifacts.append(path)
    if args.format in ("svg", "both"):
        path = out / "sensitivity.svg"
        report.svg_paired_bars(path, result.param_names, result.norm_projected,
                               result.norm_specified, "projected", "specified",
                               title="local sensitivity (+10%)")
        artifacts.append(path)
    report.write_manifest(out, "sensitivity", cfg.config_hash, [cfg.seed], artifacts)
    top_p = result.param_names[int(np.argmax(result.raw_projected))]
    flag = " (degenerate: an all-zero column)" if result.degenerate else ""
    return f"sensitivity: {len(result.param_names)} parameters, top projected {top_p}{flag}"


ABM_EXTRACTORS = {
    "final_cancer_count": lambda o: float(o.data[:, :, 0].sum()),
    "final_tcell_count": lambda o: float(o.data[:, :, 1].sum()),
}


def cmd_cluster(args) -> str:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(_model_path(args, out))
    container = DatasetContainer.load(_dataset_path(args, out))
    dataset = container.outputs()
    k = int(cfg.analysis.get("cluster", {}).get("k", 2))

    projections = embedding.project_dataset(model, dataset)
    dist = embedding.mean_distance_matrix(projections)
    result = an.agglomerative_cluster(dist, k)
    extractors = ABM_EXTRACTORS if container.shape_tag == "grid" else {}
    profile = an.characterize_clusters(result.assignments, dataset,
                                       container.param_names, extractors)

    artifacts = []
    if args.format in ("csv", "both"):
        rows = []
        for c, fields in profile.profiles.items():
            n_c = int((result.assignments == c).sum())
            for name, s in fields.items():
                for b in range(len(s.bin_counts)):
                    rows.append((c, n_c, name, s.minimum, s.q1, s.median, s.q3,
                                 s.maximum, s.bin_edges[b], s.bin_edges[b + 1],
                                 int(s.bin_counts[b])))
        path = out / "cluster.csv"
        report.emit_csv(path, ["cluster", "n_samples", "field", "min", "q1", "median",
                               "q3", "max", "bin_lo", "bin_hi", "bin_count"], rows)
        artifacts.append(path)
    if args.format in ("svg", "both"):
        field_names = list(next(iter(profile.profiles.values())).keys())
        fields = []
        for name in field_names:
            edges = profile.profiles[0][name].bin_edges
            by_cluster = {c: profile.profiles[c][name].bin_counts
                          for c in profile.profiles if profile.profiles[c]}
            fields.append((name, edges, by_cluster))
        path = out / "cluster.svg"
        report.svg_histogram_panel(path, fields, sorted(profile.profiles))
        artifacts.append(path)
    report.write_manifest(out, "cluster", cfg.config_hash, [cfg.seed], artifacts)
    sizes = [int((result.assignments == c).sum()) for c in range(k)]
    return f"cluster: k={k}, sizes {sizes}, {len(profile.empty_clusters)} empty"


def cmd_gradcheck(args) -> str:
    worst = {}
    for name, spec in standard_check_specs().items():
        worst[name] = grad_check(spec, seed=args.seed if args.seed is not None else 0)
    lines = []
    ok = True
    for name, err in worst.items():
        passed = err <= GRADCHECK_TOL
        ok = ok and passed
        lines.append(f"{name}: max relative error {err:.3e} "
                     f"{'<=' if passed else '>'} {GRADCHECK_TOL:g}")
    summary = "gradcheck: " + "; ".join(lines)
    if not ok:
        raise RuntimeError(summary)
    return summary


COMMANDS = {
    "generate": cmd_generate,
    "testdata": cmd_testdata,
    "train": cmd_train,
    "consensus": cmd_consensus,
    "sweep": cmd_sweep,
    "knockout": cmd_knockout,
    "sensitivity": cmd_sensitivity,
    "cluster": cmd_cluster,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        print(COMMANDS[args.command](args))
        return 0
    except (ConfigError, ContainerError, ValueError, KeyError, IndexError,
            FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except RuntimeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
