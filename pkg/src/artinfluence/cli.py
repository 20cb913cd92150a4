"""Command line for the style classification and influence pipeline.

Every command reads and writes fixed file names inside ``--out``; later
stages look there for the artifacts of earlier ones.

Exit codes: 0 success, 2 invalid input, 3 missing prerequisite artifact,
4 numeric failure.
"""

import argparse
import csv
import dataclasses
import datetime as dt
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import core, embed, evaluation, graph, nnet, pixmap, plotting, tsne
from .core import STYLES, StyleClass

log = logging.getLogger("artinfluence")

EXIT_OK, EXIT_INPUT, EXIT_MISSING, EXIT_NUMERIC = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def missing(what, path):
    return CliError(f"missing prerequisite {what}: {path}", EXIT_MISSING)


# -- configuration ------------------------------------------------------------

@dataclasses.dataclass
class PipelineConfig:
    manifest: str = ""
    images_root: str = ""
    checkpoint: str = ""
    out: str = "out"
    seed: int = 0
    split_ratio: float = 0.9
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 20
    input_size: int = 32
    conv_blocks: str = "8,16,32"
    tsne_dims: int = 2
    perplexity: float = 30.0
    tsne_iterations: int = 1000
    tsne_learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    momentum_switch: int = 250

    @classmethod
    def from_text(cls, text):
        """Flat ``key = value`` lines; ``#`` starts a comment."""
        fields = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"config line {n}: expected key = value", EXIT_INPUT)
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in fields:
                raise CliError(f"config line {n}: unknown key {key!r}", EXIT_INPUT)
            values[key] = value
        return cls().updated(values)

    def updated(self, values):
        out = dataclasses.replace(self)
        types = {f.name: type(f.default) for f in dataclasses.fields(self)}
        for key, value in values.items():
            if value is None:
                continue
            try:
                setattr(out, key, types[key](value))
            except ValueError:
                raise CliError(f"config key {key}: cannot parse {value!r}", EXIT_INPUT) from None
        return out

    def digest(self):
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def network(self):
        blocks = tuple(int(v) for v in self.conv_blocks.split(",") if v.strip())
        return nnet.NetworkConfig(input_size=(self.input_size, self.input_size, 3),
                                  conv_blocks=blocks)

    def training(self):
        return nnet.TrainConfig(batch_size=self.batch_size, learning_rate=self.learning_rate,
                                momentum=self.momentum, epochs=self.epochs, seed=self.seed)

    def tsne(self):
        return tsne.TsneConfig(out_dims=self.tsne_dims, perplexity=self.perplexity,
                               iterations=self.tsne_iterations,
                               learning_rate=self.tsne_learning_rate,
                               exaggeration=self.early_exaggeration,
                               exaggeration_iters=self.exaggeration_iters,
                               momentum_initial=self.momentum_initial,
                               momentum_final=self.momentum_final,
                               momentum_switch=self.momentum_switch, seed=self.seed)


class Run:
    """One command invocation: config, output directory and written artifacts."""

    def __init__(self, command, config):
        self.command = command
        self.config = config
        self.out = Path(config.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs = []

    def path(self, name):
        return self.out / name

    def require(self, name, what=None):
        p = self.path(name)
        if not p.exists():
            raise missing(what or name, p)
        return p

    def write(self, name, data):
        p = self.path(name)
        if isinstance(data, bytes):
            p.write_bytes(data)
        else:
            p.write_text(data)
        self.outputs.append(name)
        return p

    def figure(self, name, fn, *args, **kwargs):
        fn(*args, self.path(name), **kwargs)
        self.outputs.append(name)

    def finish(self, extra=None):
        meta = {
            "command": self.command,
            "seed": self.config.seed,
            "config_hash": self.config.digest(),
            "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(),
            "outputs": self.outputs,
        }
        meta.update(extra or {})
        self.path(f"{self.command}.meta.json").write_text(json.dumps(meta, indent=2) + "\n")


# -- shared loaders -----------------------------------------------------------

def _load_manifest(run):
    p = run.require("manifest_clean.csv", "cleaned manifest (run ingest first)")
    try:
        return core.read_manifest(p)
    except core.ManifestError as exc:
        raise CliError(f"{p}: {exc}", EXIT_INPUT) from None


def _load_split(run):
    p = run.require("split.csv", "split assignment (run ingest first)")
    return core.SplitAssignment.from_csv(p.read_text())


def _load_model(run):
    p = Path(run.config.checkpoint) if run.config.checkpoint else run.path("model.sgw")
    if not p.exists():
        raise missing("checkpoint (run train first)", p)
    try:
        return nnet.load_checkpoint(p)
    except nnet.CheckpointError as exc:
        raise CliError(f"{p}: {exc}", EXIT_INPUT) from None


def _images_root(run):
    if run.config.images_root:
        return Path(run.config.images_root)
    meta = run.path("ingest.meta.json")
    if meta.exists():
        return Path(json.loads(meta.read_text())["images_root"])
    raise missing("images root (pass --images-root)", "<unset>")


def _load_image(path, size):
    if not path.exists():
        raise missing("image", path)
    try:
        img = pixmap.to_unit(pixmap.read(path))
    except pixmap.PixmapError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
    if img.shape[:2] != size:
        img = np.clip(nnet.layers.bilinear_resize(img, *size), 0.0, 1.0)
    return img


def _load_images(run, paintings, config):
    root = _images_root(run)
    size = config.input_size[:2]
    if not paintings:
        return np.zeros((0,) + config.input_size)
    return np.stack([_load_image(root / p.image_ref, size) for p in paintings])


def _feature_table(path):
    """painting_id plus numeric columns, as (ids, matrix)."""
    data = path.read_bytes()
    if data[:4] == embed.AEMB_MAGIC:
        recs = embed.embeddings_from_bytes(data)
        return [r.painting_id for r in recs], np.array([r.vector for r in recs])
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    header = next(reader, None)
    if not header or header[0] != "painting_id" or len(header) < 2:
        raise CliError(f"{path}: expected a painting_id column followed by features", EXIT_INPUT)
    ids, rows = [], []
    for row in reader:
        if not row:
            continue
        try:
            rows.append([float(v) for v in row[1:len(header)]])
        except ValueError as exc:
            raise CliError(f"{path} line {reader.line_num}: {exc}", EXIT_INPUT) from None
        ids.append(row[0])
    return ids, np.array(rows, dtype=np.float64).reshape(len(ids), len(header) - 1)


def _input_file(run, given, default):
    p = Path(given) if given else run.path(default)
    if not p.exists():
        raise missing(default if not given else "input", p)
    return p


# -- commands -----------------------------------------------------------------

def cmd_ingest(run, args):
    cfg = run.config
    if not cfg.manifest:
        raise CliError("no manifest given (--manifest)", EXIT_INPUT)
    src = Path(cfg.manifest)
    if not src.exists():
        raise CliError(f"manifest not found: {src}", EXIT_INPUT)
    try:
        manifest = core.read_manifest(src)
    except core.ManifestError as exc:
        raise CliError(f"{src}: {exc}", EXIT_INPUT) from None
    root = Path(cfg.images_root) if cfg.images_root else src.parent
    probe = core.PixmapProbe(root) if args.probe else None
    cleaned, report = core.clean(manifest, probe)
    run.write("manifest_clean.csv", core.manifest_to_csv(cleaned))
    run.write("exclusions.csv", report.to_csv())
    hist = core.class_histogram(cleaned)
    run.write("class_histogram.csv", "style,count\n"
              + "".join(f"{s.name},{hist[s]}\n" for s in STYLES))
    run.figure("class_histogram.svg", plotting.plot_class_histogram, hist)
    n_train = n_test = 0
    if len(cleaned):
        assignment = core.split(cleaned, cfg.split_ratio, cfg.seed)
        run.write("split.csv", assignment.to_csv())
        n_train, n_test = len(assignment.train), len(assignment.test)
    print(f"{len(cleaned):,} paintings, {len(cleaned.artists):,} artists, "
          f"{sum(1 for s in STYLES if hist[s])} classes "
          f"({len(manifest):,} read, {len(report):,} excluded)")
    print(f"split {cfg.split_ratio:g} seed {cfg.seed}: {n_train:,} train, {n_test:,} test")
    run.finish({"images_root": str(root.resolve())})


def _split_sets(run, manifest, split, net):
    by_id = manifest.by_id()
    train_p = [by_id[i] for i in split.train if i in by_id]
    test_p = [by_id[i] for i in split.test if i in by_id]
    x_tr = _load_images(run, train_p, net)
    x_te = _load_images(run, test_p, net)
    y_tr = np.array([p.style.label for p in train_p], dtype=np.intp)
    y_te = np.array([p.style.label for p in test_p], dtype=np.intp)
    return (x_tr, y_tr), (x_te, y_te), test_p


def cmd_train(run, args):
    cfg = run.config
    manifest = _load_manifest(run)
    split = _load_split(run)
    try:
        net = cfg.network()
        tcfg = cfg.training()
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    train_set, val_set, _ = _split_sets(run, manifest, split, net)
    if len(train_set[0]) == 0:
        raise CliError("training split is empty", EXIT_INPUT)
    try:
        result = nnet.train(train_set, val_set, tcfg, net)
    except nnet.TrainingDivergedError as exc:
        raise CliError(str(exc), EXIT_NUMERIC) from None
    run.write("model.sgw", nnet.checkpoint.dumps(result.params))
    run.write("history.csv", nnet.history_to_csv(result.history))
    if result.history:
        run.figure("history.svg", plotting.plot_history, result.history)
        last = result.history[result.best_epoch - 1]
        print(f"best epoch {result.best_epoch}/{len(result.history)}: "
              f"val accuracy {last.val_accuracy:.4f}")
    run.finish({"best_epoch": result.best_epoch})


def cmd_evaluate(run, args):
    manifest = _load_manifest(run)
    split = _load_split(run)
    params = _load_model(run)
    _, (x_te, _), test_p = _split_sets(run, manifest, split, params.config)
    if not test_p:
        raise CliError("test split is empty", EXIT_INPUT)
    probs = nnet.predict_proba(params, x_te)
    preds = [evaluation.Prediction(p.painting_id, p.style, pr) for p, pr in zip(test_p, probs)]
    accuracy, matrix = evaluation.evaluate(preds)
    rates = evaluation.confusion_rates(matrix)
    run.write("predictions.csv", evaluation.predictions_to_csv(preds))
    run.write("confusion.csv", matrix.to_csv())
    run.write("confusion_rates.csv", evaluation.rates_to_csv(rates))
    run.write("misclassified.csv", evaluation.misclassifications_to_csv(
        evaluation.top_misclassifications(preds, args.top)))
    run.figure("confusion.svg", plotting.plot_confusion, rates)
    print(f"test accuracy {accuracy:.4f} on {len(preds):,} paintings")
    run.finish({"accuracy": accuracy})


def cmd_embed(run, args):
    manifest = _load_manifest(run)
    params = _load_model(run)
    paintings = list(manifest.paintings)
    if args.subset == "test":
        keep = set(_load_split(run).test)
        paintings = [p for p in paintings if p.painting_id in keep]
    images = _load_images(run, paintings, params.config)
    feats = nnet.extract_features_batch(params, images)
    probs = nnet.predict_proba(params, images)
    records = [embed.EmbeddingRecord(p.painting_id, f) for p, f in zip(paintings, feats)]
    run.write("embeddings.csv", embed.embeddings_to_csv(records))
    run.write("embeddings.aemb", embed.embeddings_to_bytes(records))
    lines = [",".join(["painting_id"] + [s.name for s in STYLES])]
    lines += [",".join([p.painting_id] + [repr(float(v)) for v in pr])
              for p, pr in zip(paintings, probs)]
    run.write("probabilities.csv", "\n".join(lines) + "\n")
    print(f"embedded {len(records):,} paintings")
    run.finish()


def _parse_class(value):
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        try:
            return StyleClass.parse(value).label
        except ValueError:
            raise CliError(f"unknown class {value!r}", EXIT_INPUT) from None


def cmd_gradcam(run, args):
    params = _load_model(run)
    if not args.image:
        raise CliError("no image given (--image)", EXIT_INPUT)
    image = _load_image(Path(args.image), params.config.input_size[:2])
    cls = _parse_class(args.class_)
    if cls is None:
        cls = int(nnet.predict_proba(params, image[None])[0].argmax())
    try:
        cam = nnet.grad_cam(params, image, cls, args.layer)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    heat = cam.upsampled
    peak = heat.max()
    heat = heat / peak if peak > 0 else heat
    run.write("gradcam.pgm", pixmap.encode(pixmap.to_uint8(heat)))
    overlay = 0.5 * image + 0.5 * np.stack([heat, np.zeros_like(heat), 1.0 - heat], axis=-1)
    run.write("gradcam_overlay.ppm", pixmap.encode(pixmap.to_uint8(overlay)))
    run.figure("gradcam.svg", plotting.plot_gradcam, image, heat,
               title=f"{StyleClass.from_label(cls).name} ({cam.layer_id})")
    print(f"Grad-CAM for class {StyleClass.from_label(cls).name} at {cam.layer_id}")
    run.finish({"class": StyleClass.from_label(cls).name, "layer": cam.layer_id})


def cmd_tsne(run, args):
    default = "probabilities.csv" if args.features == "probabilities" else "embeddings.csv"
    src = _input_file(run, args.input, default)
    ids, X = _feature_table(src)
    manifest = _load_manifest(run)
    by_id = manifest.by_id()
    unknown = [i for i in ids if i not in by_id]
    if unknown:
        raise CliError(f"{len(unknown)} painting ids not in the manifest, e.g. {unknown[0]}",
                       EXIT_INPUT)
    try:
        config = run.config.tsne()
        if len(ids) < 3:
            raise ValueError("t-SNE needs at least 3 paintings")
        if config.perplexity >= len(ids):
            config = dataclasses.replace(config, perplexity=max(1.5, (len(ids) - 1) / 3))
            log.warning("perplexity lowered to %.3g for %d points", config.perplexity, len(ids))
        result = tsne.run_tsne(X, config)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    except tsne.TsneError as exc:
        raise CliError(str(exc), EXIT_NUMERIC) from None
    styles = [by_id[i].style.name for i in ids]
    text = tsne.embedding_to_csv(ids, result.Y, styles)
    run.write("tsne.csv", text)
    run.write("kl_history.csv", tsne.kl_history_to_csv(result.kl_history))
    run.figure("tsne.svg", plotting.render_scatter, text)
    print(f"t-SNE of {len(ids):,} points to {config.out_dims}D, "
          f"final KL {result.kl_history[-1]:.4f}")
    run.finish({"jittered": result.jittered, "perplexity": config.perplexity})


def _profiles(run, args):
    src = _input_file(run, args.input, "embeddings.csv")
    try:
        records = embed.read_embeddings(src)
    except embed.EmbeddingError as exc:
        raise CliError(f"{src}: {exc}", EXIT_INPUT) from None
    manifest = _load_manifest(run)
    try:
        profiles = embed.aggregate_artists(records, manifest)
    except embed.EmbeddingError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    names = {aid: a.name for aid, a in manifest.artists.items()}
    labels = dict(names)
    if args.index_mapping:
        mapping = graph.read_index_mapping(Path(args.index_mapping).read_text())
        labels = {aid: mapping.get(name, name) for aid, name in names.items()}
    return profiles, names, labels


def _graph_outputs(run, prefix, g, labels):
    run.write(f"{prefix}.json", graph.export_graph(g, "json"))
    run.write(f"{prefix}.dot", graph.export_graph(g, "dot", labels))
    if g.ties:
        run.write(f"{prefix}_ties.txt", "\n".join(g.ties) + "\n")


def cmd_network(run, args):
    profiles, names, labels = _profiles(run, args)
    try:
        g = graph.build_similarity_network(profiles)
    except (graph.GraphError, embed.ZeroNormError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    _graph_outputs(run, "network", g, labels)
    report = graph.expected_linkage_report(g, names)
    run.write("linkage_report.csv", "artist_a,artist_b,status\n"
              + "".join(f"{a},{b},{s}\n" for a, b, s in report))
    run.figure("network.svg", plotting.plot_network, g, labels=labels)
    print(f"network: {len(g.nodes)} artists, {len(g.edges)} edges, {len(g.ties)} ties")
    run.finish()


def cmd_lineage(run, args):
    profiles, _, labels = _profiles(run, args)
    dated, undated = graph.split_by_year(profiles)
    run.write("lineage_exclusions.csv", "artist_id,reason\n"
              + "".join(f"{a},no production year\n" for a in undated))
    try:
        g = graph.build_lineage(dated)
    except (graph.GraphError, embed.ZeroNormError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    _graph_outputs(run, "lineage", g, labels)
    pos = graph.layout_timeline(g)
    run.write("timeline.csv", "artist_id,x,y\n"
              + "".join(f"{a},{x!r},{y!r}\n" for a, (x, y) in sorted(pos.items())))
    run.figure("timeline.svg", plotting.plot_timeline, g, pos, labels=labels)
    print(f"lineage: {len(g.nodes)} artists, {len(g.edges)} edges, "
          f"{len(undated)} excluded without years")
    run.finish()


def cmd_render(run, args):
    src = _input_file(run, args.input, "tsne.csv")
    output = Path(args.output) if args.output else run.path("scatter.svg")
    try:
        _, coords, _ = plotting.read_scatter_csv(src.read_bytes())
        if args.dims and coords.shape[1] != args.dims:
            raise plotting.ScatterError(f"{src} has {coords.shape[1]} dimensions, "
                                        f"not {args.dims}")
        plotting.render_scatter(src.read_bytes(), output)
    except plotting.ScatterError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    run.outputs.append(str(output))
    print(f"wrote {output}")
    run.finish()


COMMANDS = {
    "ingest": cmd_ingest, "train": cmd_train, "evaluate": cmd_evaluate, "embed": cmd_embed,
    "gradcam": cmd_gradcam, "tsne": cmd_tsne, "network": cmd_network, "lineage": cmd_lineage,
    "render": cmd_render,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="artifact directory")
    common.add_argument("--images-root", dest="images_root", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="artinfluence", parents=[common],
                                     description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse, clean and split a manifest")
    p.add_argument("--manifest", default=argparse.SUPPRESS)
    p.add_argument("--ratio", dest="split_ratio", type=float, default=argparse.SUPPRESS)
    p.add_argument("--probe", action="store_true",
                   help="read each image and drop near-monochrome ones")

    p = sub.add_parser("train", parents=[common], help="train the classifier")
    p.add_argument("--epochs", type=int, default=argparse.SUPPRESS)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=argparse.SUPPRESS)
    p.add_argument("--learning-rate", dest="learning_rate", type=float,
                   default=argparse.SUPPRESS)

    p = sub.add_parser("evaluate", parents=[common], help="confusion matrix on the test split")
    p.add_argument("--top", type=int, default=20, help="misclassifications to list")
    p.add_argument("--checkpoint", default=argparse.SUPPRESS)

    p = sub.add_parser("embed", parents=[common], help="extract 512-d painting features")
    p.add_argument("--subset", choices=("all", "test"), default="all")
    p.add_argument("--checkpoint", default=argparse.SUPPRESS)

    p = sub.add_parser("gradcam", parents=[common], help="Grad-CAM heat map for one image")
    p.add_argument("--image")
    p.add_argument("--class", dest="class_", help="class index 0-8 or style name")
    p.add_argument("--layer", help="convolution layer, default the last one")
    p.add_argument("--checkpoint", default=argparse.SUPPRESS)

    p = sub.add_parser("tsne", parents=[common], help="t-SNE of painting features")
    p.add_argument("--input", help="feature CSV or AEMB file")
    p.add_argument("--features", choices=("embeddings", "probabilities"), default="embeddings")
    p.add_argument("--dims", dest="tsne_dims", type=int, choices=(2, 3),
                   default=argparse.SUPPRESS)
    p.add_argument("--perplexity", type=float, default=argparse.SUPPRESS)
    p.add_argument("--iterations", dest="tsne_iterations", type=int, default=argparse.SUPPRESS)

    for name, text in (("network", "maximum cosine similarity artist network"),
                       ("lineage", "chronological artist lineage")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--input", help="embedding CSV or AEMB file")
        p.add_argument("--index-mapping", dest="index_mapping",
                       help="index,artist_name CSV used for node labels")

    p = sub.add_parser("render", parents=[common], help="scatter plot of a t-SNE CSV")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--dims", type=int, choices=(2, 3))
    return parser


CONFIG_KEYS = {f.name for f in dataclasses.fields(PipelineConfig)}


def resolve_config(args):
    config = PipelineConfig()
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        path = Path(cfg_path)
        if not path.exists():
            raise CliError(f"config file not found: {path}", EXIT_INPUT)
        config = PipelineConfig.from_text(path.read_text())
    overrides = {k: v for k, v in vars(args).items() if k in CONFIG_KEYS}
    return config.updated(overrides)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        run = Run(args.command, config)
        COMMANDS[args.command](run, args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
