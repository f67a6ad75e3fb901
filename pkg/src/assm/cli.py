"""Command-line driver for the full pipeline.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure (rank loss / degenerate geometry).  Report subcommands write a PNG
figure next to each delimited output.  The ASSM_LOG environment variable
sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AssmError, DataError, NumericalError
from .jsonio import dump_path, format_float, load_path
from . import evaluate, fixtures, mapping, obj_io, plots, population, ssm
from .morphometry import (
    get_recipe,
    load_landmarks,
    measure_mesh,
    save_landmarks,
)
from .shapes import rigid_align

log = logging.getLogger("assm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

class ProjectConfig:
    """Optional project defaults loaded from --config JSON."""

    KEYS = ("dataset", "landmarks", "output_dir", "recipe", "population_size",
            "seed", "rank", "align_tol", "align_max_iter")

    def __init__(self, doc: dict, base: Path):
        self.values = {}
        for key in self.KEYS:
            if key in doc:
                self.values[key] = doc[key]
        for key in ("dataset", "landmarks"):
            if key in self.values:
                p = base / str(self.values[key])
                if not p.exists():
                    raise DataError(f"config references missing path: {p}")
                self.values[key] = str(p)
        m = self.values.get("population_size")
        if m is not None and int(m) < 1:
            raise DataError("config population_size must be >= 1")

    def get(self, key, fallback=None):
        return self.values.get(key, fallback)


def _load_config(args) -> ProjectConfig | None:
    path = getattr(args, "config", None)
    if not path:
        return None
    return ProjectConfig(load_path(path), Path(path).parent)


def _resolve(args, config, attr, config_key=None, default=None):
    value = getattr(args, attr, None)
    if value is not None:
        return value
    if config is not None:
        got = config.get(config_key or attr)
        if got is not None:
            return got
    return default


# ---------------------------------------------------------------------------
# small csv helpers
# ---------------------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])


def _fig_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def cmd_build_base(args, config):
    dataset = obj_io.read_dataset(_resolve(args, config, "dataset"))
    if args.align:
        log.info("rigid-aligning %d shapes", len(dataset))
        dataset = rigid_align(
            dataset,
            tol=float(_resolve(args, config, "align_tol", default=1e-10)),
            max_iter=int(_resolve(args, config, "align_max_iter", default=100)),
        )
    model = ssm.build_base(dataset)
    rank = _resolve(args, config, "rank")
    if rank is not None and int(rank) < model.rank:
        rank = int(rank)
        model = ssm.BaseSsm(model.mean, model.eigenvalues[:rank], model.basis[:, :rank],
                            model.faces, model.topology_id, model.n_training)
    ssm.save_model(model, args.output)
    print(f"built model: rank {model.rank}, {model.n_points} points, "
          f"{model.n_training} training shapes -> {args.output}")


def cmd_metrics(args, config):
    model = ssm.load_model(args.model)
    dataset = obj_io.read_dataset(_resolve(args, config, "dataset"))
    metrics = ssm.compute_metrics(model, dataset, n_samples=args.samples,
                                  seed=_resolve(args, config, "seed", default=0),
                                  warn=log.warning)
    rows = [
        (int(r), float(c), float(g), float(gm), float(s), float(sm))
        for r, c, g, gm, s, sm in zip(
            metrics.n_modes, metrics.compactness,
            metrics.generality_sq, metrics.generality_mm,
            metrics.specificity_sq, metrics.specificity_mm)
    ]
    _write_csv(args.output, ["n_modes", "compactness", "generality_sq", "generality_mm",
                             "specificity_sq", "specificity_mm"], rows)
    plots.plot_metrics(metrics, _fig_path(args.output))
    print(f"metrics for rank {model.rank} -> {args.output}")


def cmd_measure(args, config):
    landmarks, recipe_id = load_landmarks(_resolve(args, config, "landmarks"))
    recipe = get_recipe(_resolve(args, config, "recipe", default=recipe_id))
    target = Path(args.target)
    if target.is_dir():
        dataset = obj_io.read_dataset(target)
        meshes = list(zip(load_path(target / obj_io.MANIFEST_NAME)["files"], dataset.meshes))
    else:
        meshes = [(target.name, obj_io.read_obj(target, topology_id=landmarks.topology_id))]
    rows = []
    for shape_id, mesh in meshes:
        mv = measure_mesh(recipe, landmarks, mesh)
        for label in recipe.labels:
            rows.append((shape_id, label, float(mv.values[label]), mv.units[label]))
    if args.json:
        doc = [{"shape_id": s, "label": c, "value": v, "unit": u} for s, c, v, u in rows]
        dump_path(doc, args.output)
    else:
        _write_csv(args.output, ["shape_id", "label", "value", "unit"], rows)
    print(f"measured {len(meshes)} shape(s) -> {args.output}")


def cmd_gen_pop(args, config):
    model = ssm.load_model(args.model)
    landmarks, recipe_id = load_landmarks(_resolve(args, config, "landmarks"))
    recipe = get_recipe(_resolve(args, config, "recipe", default=recipe_id))
    pop = population.generate_population(
        model, recipe, landmarks,
        int(_resolve(args, config, "population_size", default=1000)),
        seed=int(_resolve(args, config, "seed", default=0)),
        log=log.info,
    )
    population.save_population(pop, args.output)
    print(f"generated {pop.size} samples ({pop.n_rejected} redrawn) -> {args.output}")


def cmd_stats(args, config):
    pop = population.load_population(args.population)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    normality = population.population_normality(pop)
    report = population.pearson_reports(pop)

    hist_rows = []
    for j, label in enumerate(pop.labels):
        counts, edges = np.histogram(pop.betas_raw[:, j], bins=args.bins)
        for b in range(args.bins):
            hist_rows.append((label, float(edges[b]), float(edges[b + 1]), int(counts[b])))
    _write_csv(outdir / "histograms.csv", ["label", "bin_left", "bin_right", "count"],
               hist_rows)
    _write_csv(outdir / "normal_fit.csv", ["label", "mean", "std", "unit"],
               [(c, float(pop.betas_raw[:, j].mean()),
                 float(pop.betas_raw[:, j].std(ddof=1)), pop.stats.units.get(c, ""))
                for j, c in enumerate(pop.labels)])
    _write_csv(outdir / "shapiro.csv", ["label", "W", "p", "pass_at_0.01"],
               [(c, float(normality.statistics[j]), float(normality.pvalues[j]),
                 bool(normality.passed[j])) for j, c in enumerate(pop.labels)])
    _write_csv(outdir / "pearson_beta.csv", ["label", *pop.labels],
               [(c, *[float(v) for v in report.beta_beta[j]])
                for j, c in enumerate(pop.labels)])
    _write_csv(outdir / "pearson_alpha_beta.csv", ["coefficient", *pop.labels],
               [(f"alpha_{i + 1}", *[float(v) for v in report.alpha_beta[i]])
                for i in range(report.alpha_beta.shape[0])])

    plots.plot_histograms(pop, normality, outdir / "histograms.png", bins=args.bins)
    plots.plot_correlation(report.beta_beta, pop.labels, pop.labels,
                           outdir / "pearson_beta.png", "measurement correlations")
    n_show = min(15, report.alpha_beta.shape[0])
    plots.plot_correlation(report.alpha_beta[:n_show],
                           [f"a{i + 1}" for i in range(n_show)], pop.labels,
                           outdir / "pearson_alpha_beta.png",
                           "coefficient vs measurement correlations")
    print(f"population statistics -> {outdir}")


def cmd_learn(args, config):
    pop = population.load_population(args.population)
    q = mapping.fit_mapping(pop)
    report = population.pearson_reports(pop)
    agreement = evaluate.mapping_vs_corr(q, report)
    mapping.save_mapping(q, pop.stats, args.output)
    print(f"learned mapping ({len(q.labels)} x {q.matrix.shape[1]}), "
          f"rank_ok={q.rank_ok} -> {args.output}")
    print(f"mapping_vs_corr: weights_mad={agreement.weights_mad:.6f} "
          f"covariance_mad={agreement.covariance_mad:.6f}")
    if args.orthogonal:
        k = mapping.orthogonal_procrustes(q)
        k_agreement = evaluate.mapping_vs_corr(k, report)
        mapping.save_mapping(k, pop.stats, args.orthogonal)
        print(f"orthogonal mapping -> {args.orthogonal}")
        print(f"orthogonal mapping_vs_corr: weights_mad={k_agreement.weights_mad:.6f}")


def cmd_build_anat(args, config):
    base = ssm.load_model(args.model)
    obj, stats, kind = mapping.load_mapping(args.mapping)
    if kind == mapping.KIND_ANAT:
        model = mapping.build_anat(base, obj, stats)
    else:
        model = mapping.build_oc_anat(base, obj, stats)
    mapping.save_anat_model(model, args.output)
    print(f"built {model.kind} model over {model.labels} -> {args.output}")


def _parse_set(values) -> dict[str, float]:
    out = {}
    for item in values or ():
        if "=" not in item:
            raise DataError(f"--set expects LABEL=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        out[key.strip()] = float(raw)
    return out


def cmd_sample(args, config):
    model = mapping.load_anat_model(args.model)
    values = _parse_set(args.set)
    shape, beta_std = mapping.generate_from_physical(model, values)
    mesh = ssm.devectorize(shape, model.base.faces, model.base.topology_id)
    obj_io.write_obj(mesh, args.output)
    readout = mapping.read_params_physical(model, shape)
    print(f"generated shape -> {args.output}")
    for j, label in enumerate(model.labels):
        req = values.get(label)
        req_s = f"{req:.3f}" if req is not None else "(free)"
        print(f"  {label}: requested {req_s}, std {beta_std[j]:+.3f}, "
              f"readout {readout[label]:.3f} {model.stats.units.get(label, '')}")


def cmd_variability(args, config):
    model = mapping.load_anat_model(args.model)
    report = mapping.variability(model)
    rows = [(model.labels[j], float(report.variance[j]), float(report.normalized[j]))
            for j in report.order]
    _write_csv(args.output, ["label", "variance_mm2", "fraction_of_total"], rows)
    sub_reports = None
    if args.ablate:
        sub_reports = []
        current = model
        chain = []
        while current.n_params > 1:
            drop = mapping.variability(current).sorted_labels()[0]
            chain.append(drop)
            current = mapping.sub_model(current, drop)
            sub_reports.append(("drop " + "+".join(chain), mapping.variability(current)))
        ablate_rows = []
        for name, rep in sub_reports:
            for j in rep.order:
                ablate_rows.append((name, rep.labels[j], float(rep.variance[j]),
                                    float(rep.normalized[j])))
        ablate_path = Path(args.output).with_name(Path(args.output).stem + "_ablation.csv")
        _write_csv(ablate_path, ["sub_model", "label", "variance_mm2", "fraction_of_total"],
                   ablate_rows)
        print(f"ablation table -> {ablate_path}")
    plots.plot_variability(report, _fig_path(args.output), sub_reports)
    total = float(report.normalized.sum())
    print(f"variability ({model.kind}) -> {args.output}; total fraction {total:.4f}")


def cmd_sweep(args, config):
    model = mapping.load_anat_model(args.model)
    recipe = landmarks = None
    lm_path = _resolve(args, config, "landmarks")
    if lm_path:
        landmarks, recipe_id = load_landmarks(lm_path)
        recipe = get_recipe(_resolve(args, config, "recipe", default=recipe_id))
    result = mapping.sweep(model, args.param, steps=args.steps,
                           recipe=recipe, landmarks=landmarks)
    header = ["t"]
    for label in result.labels:
        header += [f"{label}_std", f"{label}_phys"]
    if result.measured_raw is not None:
        header += [f"{label}_measured" for label in result.labels]
    rows = []
    for i, t in enumerate(result.t_values):
        row = [float(t)]
        for j in range(len(result.labels)):
            row += [float(result.readout_std[i, j]), float(result.readout_raw[i, j])]
        if result.measured_raw is not None:
            row += [float(v) for v in result.measured_raw[i]]
        rows.append(row)
    _write_csv(args.output, header, rows)
    slopes_path = Path(args.output).with_name(Path(args.output).stem + "_slopes.csv")
    _write_csv(slopes_path, ["label", "slope"],
               [(c, float(s)) for c, s in zip(result.labels, result.slopes)])
    plots.plot_sweep(result, _fig_path(args.output))
    print(f"swept {args.param} over +-{args.span} ({args.steps} steps) -> {args.output}")


def _load_truth(path, labels) -> list[dict[str, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = [{c: float(row[c]) for c in labels} for row in reader]
    return rows


def cmd_loo(args, config):
    dataset = obj_io.read_dataset(_resolve(args, config, "dataset"))
    landmarks, recipe_id = load_landmarks(_resolve(args, config, "landmarks"))
    recipe = get_recipe(_resolve(args, config, "recipe", default=recipe_id))
    truth = _load_truth(args.truth, recipe.labels) if args.truth else None
    report = evaluate.loo_evaluate(
        dataset, recipe, landmarks,
        n_population=int(_resolve(args, config, "population_size", default=1000)),
        seed=int(_resolve(args, config, "seed", default=0)),
        ground_truth=truth, predictor=args.predictor, log=log.info,
    )
    summary = report.summary()
    rows = []
    for route in evaluate.MODEL_NAMES:
        for label in report.labels:
            s = summary[route][label]
            rows.append((route, label, report.units.get(label, ""),
                         s["mean"], s["std"], s["min"], s["max"]))
    _write_csv(args.output, ["model", "label", "unit", "mean", "std", "min", "max"], rows)
    plots.plot_loo(report, _fig_path(args.output))
    print(f"leave-one-out over {len(dataset)} shapes -> {args.output}")


def cmd_fixtures_gen(args, config):
    if args.spec:
        spec = fixtures.spec_from_dict(load_path(args.spec))
    elif args.default:
        maker = (fixtures.default_femur_spec if args.default == "femur"
                 else fixtures.default_scapula_spec)
        spec = maker(n_samples=args.samples, seed=args.seed)
    else:
        raise DataError("fixtures gen needs a spec file or --default femur|scapula")
    family = fixtures.sample_family(spec, log=log.info)
    outdir = Path(args.output)
    obj_io.write_dataset(family.dataset, outdir)
    save_landmarks(family.landmarks, spec.kind, outdir / "landmarks.json")
    dump_path(fixtures.spec_to_dict(spec), outdir / "family_spec.json")
    labels = spec.measurement_labels
    _write_csv(outdir / "ground_truth.csv", list(labels),
               [tuple(float(row[c]) for c in labels) for row in family.ground_truth()])
    print(f"wrote {len(family.dataset)} fixture shapes "
          f"({family.n_rejected} draws rejected) -> {outdir}")


def cmd_serve(args, config):
    import uvicorn

    from .service import create_app

    models = {Path(p).stem: mapping.load_anat_model(p) for p in args.models}
    app = create_app(models, std_clamp=args.clamp)
    print(f"serving {sorted(models)} on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="assm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"assm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="project config JSON with shared defaults")
        return p

    p = add("build-base", cmd_build_base, "build the PCA model from a dataset directory")
    p.add_argument("dataset", nargs="?")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--align", action="store_true", help="rigidly align shapes first")
    p.add_argument("--rank", type=int, help="truncate to this many modes")

    p = add("metrics", cmd_metrics, "compactness/generality/specificity curves")
    p.add_argument("model")
    p.add_argument("dataset", nargs="?")
    p.add_argument("--samples", type=int, default=200, help="random draws for specificity")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True, help="CSV path (figure written beside)")

    p = add("measure", cmd_measure, "measure a mesh or dataset with a landmark file")
    p.add_argument("target", help="OBJ file or dataset directory")
    p.add_argument("--landmarks")
    p.add_argument("--recipe", choices=["femur", "scapula"])
    p.add_argument("--json", action="store_true", help="write JSON instead of CSV")
    p.add_argument("-o", "--output", required=True)

    p = add("gen-pop", cmd_gen_pop, "generate a synthetic measured population")
    p.add_argument("model")
    p.add_argument("--landmarks")
    p.add_argument("-M", "--population-size", type=int, dest="population_size")
    p.add_argument("--recipe", choices=["femur", "scapula"])
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True, help="population CSV path")

    p = add("stats", cmd_stats, "histograms, normality and correlation reports")
    p.add_argument("population", help="population CSV from gen-pop")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("-o", "--output", required=True, help="output directory")

    p = add("learn", cmd_learn, "fit the coefficient->measurement mapping")
    p.add_argument("population")
    p.add_argument("-o", "--output", required=True, help="mapping JSON path")
    p.add_argument("--orthogonal", metavar="K_JSON",
                   help="also solve the orthogonal Procrustes problem and write K")

    p = add("build-anat", cmd_build_anat, "assemble a generative anatomical model")
    p.add_argument("model", help="base model JSON")
    p.add_argument("mapping", help="mapping JSON from learn")
    p.add_argument("-o", "--output", required=True)

    p = add("sample", cmd_sample, "generate a mesh from physical parameter values")
    p.add_argument("model", help="anatomical model JSON")
    p.add_argument("--set", action="append", metavar="LABEL=VALUE")
    p.add_argument("-o", "--output", required=True, help="OBJ path")

    p = add("variability", cmd_variability, "per-parameter shape variance report")
    p.add_argument("model", help="anatomical model JSON")
    p.add_argument("--ablate", action="store_true",
                   help="also emit the sequential sub-model table")
    p.add_argument("-o", "--output", required=True, help="CSV path")

    p = add("sweep", cmd_sweep, "vary one parameter and record all readouts")
    p.add_argument("model", help="anatomical model JSON")
    p.add_argument("--param", required=True)
    p.add_argument("--steps", type=int, default=13)
    p.add_argument("--span", type=float, default=3.0)
    p.add_argument("--landmarks", help="landmark file enabling geometric re-measurement")
    p.add_argument("--recipe", choices=["femur", "scapula"])
    p.add_argument("-o", "--output", required=True, help="CSV path")

    p = add("loo", cmd_loo, "leave-one-out prediction error table")
    p.add_argument("dataset", nargs="?")
    p.add_argument("--landmarks")
    p.add_argument("--recipe", choices=["femur", "scapula"])
    p.add_argument("-M", "--population-size", type=int, dest="population_size")
    p.add_argument("--seed", type=int)
    p.add_argument("--truth", help="ground-truth CSV (one row per shape)")
    p.add_argument("--predictor", choices=["mapping", "shape-lstsq"],
                   default="mapping",
                   help="parameter readout for the anatomical models")
    p.add_argument("-o", "--output", required=True, help="CSV path")

    fx = sub.add_parser("fixtures", help="parametric test bone families")
    fx_sub = fx.add_subparsers(dest="fixtures_command", required=True)
    p = fx_sub.add_parser("gen", help="generate a fixture dataset directory")
    p.set_defaults(func=cmd_fixtures_gen)
    p.add_argument("spec", nargs="?", help="family spec JSON")
    p.add_argument("--config")
    p.add_argument("--default", choices=["femur", "scapula"],
                   help="use a built-in family spec")
    p.add_argument("--samples", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="output directory")

    p = add("serve", cmd_serve, "HTTP service exposing anatomical models")
    p.add_argument("models", nargs="+", help="anatomical model JSON files")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--clamp", type=float, default=4.0,
                   help="reject requests beyond this many standardized units")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ASSM_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        args.func(args, config)
    except NumericalError as exc:
        print(f"assm: numerical error: {exc}", file=sys.stderr)
        return 3
    except AssmError as exc:
        print(f"assm: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"assm: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
