"""Command-line pipeline: ingest once, then run each analysis stage off files.

Every stage writes delimited-text tables plus a flat key=value manifest in
the output directory. Outputs carry no timestamps, so re-running a stage
with identical inputs reproduces every file byte for byte.

Exit codes: 0 success, 1 computation error, 2 input/usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import re
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_PERMUTATIONS,
    fit_distance_decay,
    pair_observations,
    pearson,
    spearman,
)
from .corpus import (
    LoadResult,
    PoiRecord,
    build_vocabulary,
    load_pois,
    partition_by_region,
    read_region_mapping,
    tokenize,
    typed_subsets,
)
from .embed import EmbeddingConfig, build_training_pairs, load_model, save_model, train
from .errors import EmptyCorpusError, IngestError
from .geo import DistanceMatrix, distance_matrix, region_centroid
from .localness import (
    geo_tfidf,
    mean_pairwise_jsd,
    top_local_terms,
    usage_distributions,
    usage_percentages,
)
from .regionvec import (
    RegionVector,
    SimilarityMatrix,
    count_vector,
    similarity_matrix,
    tfidf_vector,
)
from .termstats import fit_zipf, rank_terms, term_frequencies

POIS_ARTIFACT = "pois.ndjson"
MODEL_ARTIFACT = "model.txt"
DISTANCES_ARTIFACT = "distances.tsv"

VECTOR_METHODS = ("count", "tfidf", "embedding")


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_text(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(outdir: Path, stage: str, entries: dict[str, object]) -> None:
    lines = [f"tool=poinames", f"version={__version__}", f"stage={stage}"]
    lines.extend(f"{key}={value}" for key, value in entries.items())
    _write_text(outdir / f"manifest_{stage}.txt", lines)


def _require(path: Path, produced_by: str) -> Path:
    if not path.is_file():
        raise FileNotFoundError(
            f"missing artifact {path}: run 'poinames {produced_by}' first"
        )
    return path


def _read_pois(outdir: Path) -> list[PoiRecord]:
    path = _require(outdir / POIS_ARTIFACT, "ingest")
    result = load_pois(path)
    if result.rejections:
        raise IngestError(
            f"{path} is corrupt: {result.rejected} records failed to parse"
        )
    return result.records


def _slug(label: str) -> str:
    cleaned = re.sub(r"[^A-Za-z0-9._-]+", "_", label).strip("_")
    return cleaned or "region"


def _matrix_lines(regions: tuple[str, ...], values: np.ndarray) -> list[str]:
    lines = ["region\t" + "\t".join(regions)]
    for i, region in enumerate(regions):
        lines.append(region + "\t" + "\t".join(_fmt(v) for v in values[i]))
    return lines


def _read_matrix(path: Path) -> tuple[tuple[str, ...], np.ndarray]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"empty matrix file {path}")
    regions = tuple(lines[0].split("\t")[1:])
    values = np.zeros((len(regions), len(regions)), dtype=np.float64)
    for i, line in enumerate(lines[1 : len(regions) + 1]):
        cells = line.split("\t")
        values[i] = [float(c) for c in cells[1:]]
    return regions, values


# ---------------------------------------------------------------- commands


def cmd_ingest(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    input_path = Path(args.input)
    if not input_path.is_file():
        raise FileNotFoundError(f"input file not found: {input_path}")
    mapping = None
    mapping_sha = ""
    if args.mapping:
        mapping_path = Path(args.mapping)
        if not mapping_path.is_file():
            raise FileNotFoundError(f"mapping file not found: {mapping_path}")
        mapping = read_region_mapping(mapping_path)
        mapping_sha = _sha256(mapping_path)

    result: LoadResult = load_pois(input_path, region_mapping=mapping)
    if not result.records:
        raise EmptyCorpusError("empty corpus: input contains no valid records")

    pois_lines = [
        json.dumps(
            {
                "name": r.name,
                "region": r.region_id,
                "latitude": r.latitude,
                "longitude": r.longitude,
                "categories": sorted(r.categories),
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        for r in result.records
    ]
    _write_text(outdir / POIS_ARTIFACT, pois_lines)

    rejection_lines = ["line\treason"]
    rejection_lines.extend(f"{r.line}\t{r.reason}" for r in result.rejections)
    _write_text(outdir / "rejections.tsv", rejection_lines)

    per_region: dict[str, int] = defaultdict(int)
    empty_names = 0
    for record in result.records:
        per_region[record.region_id] += 1
        if tokenize(record.name).empty:
            empty_names += 1
    summary = [
        f"accepted={result.accepted}",
        f"rejected={result.rejected}",
        f"empty_token_names={empty_names}",
        f"regions={len(per_region)}",
    ]
    summary.extend(f"region.{r}={per_region[r]}" for r in sorted(per_region))
    _write_text(outdir / "ingest_summary.txt", summary)

    _write_manifest(
        outdir,
        "ingest",
        {
            "input": args.input,
            "input_sha256": _sha256(input_path),
            "mapping": args.mapping or "",
            "mapping_sha256": mapping_sha,
            "out": args.out,
        },
    )
    for line in summary:
        print(line)
    return 0


def cmd_zipf(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    records = _read_pois(outdir)
    corpora = partition_by_region(records, dedup=False)
    ranked = rank_terms(term_frequencies(corpora.values()))
    fit = fit_zipf(ranked)

    lines = ["rank\tterm\tfrequency"]
    lines.extend(f"{e.rank}\t{e.term}\t{e.frequency}" for e in ranked.entries)
    _write_text(outdir / "zipf_terms.tsv", lines)
    fit_lines = [
        f"A={_fmt(fit.intercept)}",
        f"b={_fmt(fit.slope)}",
        f"r2={_fmt(fit.r_squared)}",
        f"n_terms={len(ranked)}",
    ]
    _write_text(outdir / "zipf_fit.txt", fit_lines)
    _write_manifest(
        outdir,
        "zipf",
        {"pois_sha256": _sha256(outdir / POIS_ARTIFACT), "out": args.out},
    )
    for line in fit_lines:
        print(line)
    return 0


def cmd_local_terms(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    records = _read_pois(outdir)
    variant = args.idf_variant.replace("-", "_")
    corpora = partition_by_region(records, dedup=True)
    table = geo_tfidf(corpora, variant=variant)
    tops = top_local_terms(table, k=args.top)

    terms_dir = outdir / "local_terms"
    terms_dir.mkdir(exist_ok=True)
    slugs: dict[str, str] = {}
    for region in sorted(tops):
        slug = _slug(region)
        if slug in slugs.values():
            raise ValueError(f"region ids {region!r} and another collide on slug {slug!r}")
        slugs[region] = slug
        term_set = tops[region]
        lines = ["rank\tterm\tweight"]
        lines.extend(
            f"{i}\t{t}\t{_fmt(w)}"
            for i, (t, w) in enumerate(zip(term_set.terms, term_set.weights), start=1)
        )
        _write_text(terms_dir / f"{slug}.tsv", lines)
        print(f"{region}: {len(term_set.terms)} local terms -> local_terms/{slug}.tsv")

    _write_manifest(
        outdir,
        "local_terms",
        {
            "pois_sha256": _sha256(outdir / POIS_ARTIFACT),
            "idf_variant": variant,
            "top": args.top,
            "out": args.out,
        },
    )
    return 0


def cmd_type_usage(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    records = _read_pois(outdir)
    variant = args.idf_variant.replace("-", "_")
    corpora = partition_by_region(records, dedup=True)
    table = geo_tfidf(corpora, variant=variant)
    tops = top_local_terms(table, k=args.top)
    subsets = typed_subsets(
        records,
        min_count=args.min_count,
        required_regions=sorted(corpora),
        dedup=args.count_dedup,
    )
    if not subsets:
        raise ValueError(
            f"no category has at least {args.min_count} POIs in every region"
        )
    matrix = usage_percentages(subsets, tops)
    distributions = usage_distributions(matrix)
    mean_nats = mean_pairwise_jsd(distributions)
    mean_bits = mean_pairwise_jsd(distributions, base=2)
    n_regions = len(matrix.regions)

    header = "region\t" + "\t".join(matrix.categories)
    value_lines = [header]
    for region in matrix.regions:
        cells = [
            _fmt(matrix.values[(region, c)]) if (region, c) in matrix.values else "NA"
            for c in matrix.categories
        ]
        value_lines.append(region + "\t" + "\t".join(cells))
    _write_text(outdir / "usage_matrix.tsv", value_lines)

    count_lines = ["region\tcategory\twith_local_terms\ttotal"]
    for region in matrix.regions:
        for category in matrix.categories:
            lp, p = matrix.counts[(region, category)]
            count_lines.append(f"{region}\t{category}\t{lp}\t{p}")
    _write_text(outdir / "usage_counts.tsv", count_lines)

    shared = sorted(distributions[0].probabilities)
    norm_lines = ["region\t" + "\t".join(shared)]
    for dist in distributions:
        norm_lines.append(
            dist.region_id + "\t" + "\t".join(_fmt(dist.probabilities[c]) for c in shared)
        )
    _write_text(outdir / "usage_normalized.tsv", norm_lines)

    jsd_lines = [
        f"regions={n_regions}",
        f"categories={len(matrix.categories)}",
        f"pairs={n_regions * (n_regions - 1) // 2}",
        f"mean_jsd_nats={_fmt(mean_nats)}",
        f"mean_jsd_bits={_fmt(mean_bits)}",
    ]
    _write_text(outdir / "jsd_summary.txt", jsd_lines)
    _write_manifest(
        outdir,
        "type_usage",
        {
            "pois_sha256": _sha256(outdir / POIS_ARTIFACT),
            "idf_variant": variant,
            "top": args.top,
            "min_count": args.min_count,
            "count_dedup": args.count_dedup,
            "out": args.out,
        },
    )
    for line in jsd_lines:
        print(line)
    return 0


def _region_vectors(records: list[PoiRecord], method: str, variant: str):
    corpora = partition_by_region(records, dedup=False)
    vocab = build_vocabulary(corpora.values())
    regions = sorted(corpora)
    if method == "count":
        vectors = [count_vector(corpora[r], vocab) for r in regions]
    else:
        table = geo_tfidf(corpora, variant=variant)
        vectors = [tfidf_vector(corpora[r], vocab, table) for r in regions]
    return vocab, regions, vectors


def cmd_vectors(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    records = _read_pois(outdir)
    variant = args.idf_variant.replace("-", "_")
    vocab, regions, vectors = _region_vectors(records, args.mode, variant)

    lines = ["term\t" + "\t".join(regions)]
    for slot, term in enumerate(vocab.terms):
        if args.mode == "count":
            cells = [str(int(v.values[slot])) for v in vectors]
        else:
            cells = [_fmt(v.values[slot]) for v in vectors]
        lines.append(term + "\t" + "\t".join(cells))
    _write_text(outdir / f"vectors_{args.mode}.tsv", lines)
    _write_manifest(
        outdir,
        f"vectors_{args.mode}",
        {
            "pois_sha256": _sha256(outdir / POIS_ARTIFACT),
            "mode": args.mode,
            "idf_variant": variant if args.mode == "tfidf" else "",
            "out": args.out,
        },
    )
    print(f"wrote vectors_{args.mode}.tsv ({len(vocab)} terms x {len(regions)} regions)")
    return 0


def cmd_embed(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    records = _read_pois(outdir)
    corpora = partition_by_region(records, dedup=False)
    vocab = build_vocabulary(corpora.values())
    pairs = build_training_pairs(corpora)
    config = EmbeddingConfig(
        dimension=args.dim,
        negatives=args.negatives,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=args.seed,
    )
    model = train(pairs, vocab, config)
    save_model(model, outdir / MODEL_ARTIFACT)

    summary = [
        f"dim={config.dimension}",
        f"negatives={config.negatives}",
        f"epochs={config.epochs}",
        f"learning_rate={_fmt(config.learning_rate)}",
        f"seed={config.seed}",
        f"pairs={len(pairs)}",
        f"final_loss={_fmt(model.final_loss)}",
        "epoch_losses=" + ",".join(_fmt(l) for l in model.epoch_losses),
    ]
    _write_text(outdir / "embed_summary.txt", summary)
    _write_manifest(
        outdir,
        "embed",
        {
            "pois_sha256": _sha256(outdir / POIS_ARTIFACT),
            "dim": config.dimension,
            "negatives": config.negatives,
            "epochs": config.epochs,
            "learning_rate": _fmt(config.learning_rate),
            "seed": config.seed,
            "threads": args.threads,
            "out": args.out,
        },
    )
    for line in summary[:7]:
        print(line)
    return 0


def cmd_similarity(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    records = _read_pois(outdir)
    variant = args.idf_variant.replace("-", "_")

    if args.method == "embedding":
        model = load_model(_require(outdir / MODEL_ARTIFACT, "embed"))
        vectors = [
            RegionVector(region_id=r, values=model.region_vectors[r])
            for r in sorted(model.region_vectors)
        ]
    else:
        _, _, vectors = _region_vectors(records, args.method, variant)
    sim = similarity_matrix(vectors)
    _write_text(outdir / f"similarity_{args.method}.tsv", _matrix_lines(sim.regions, sim.values))

    by_region: dict[str, list[PoiRecord]] = defaultdict(list)
    for record in records:
        by_region[record.region_id].append(record)
    centroids = {r: region_centroid(pois) for r, pois in by_region.items()}
    centroid_lines = ["region\tlatitude\tlongitude"]
    centroid_lines.extend(
        f"{r}\t{_fmt(centroids[r].latitude)}\t{_fmt(centroids[r].longitude)}"
        for r in sorted(centroids)
    )
    _write_text(outdir / "centroids.tsv", centroid_lines)
    dist = distance_matrix(centroids)
    _write_text(outdir / DISTANCES_ARTIFACT, _matrix_lines(dist.regions, dist.values))

    _write_manifest(
        outdir,
        f"similarity_{args.method}",
        {
            "pois_sha256": _sha256(outdir / POIS_ARTIFACT),
            "method": args.method,
            "idf_variant": variant if args.method == "tfidf" else "",
            "out": args.out,
        },
    )
    print(f"wrote similarity_{args.method}.tsv and {DISTANCES_ARTIFACT} ({len(sim.regions)} regions)")
    if args.km:
        # display-only conversion; files always carry meters
        print("distances_km\t" + "\t".join(dist.regions))
        for i, region in enumerate(dist.regions):
            cells = "\t".join(f"{v / 1000.0:.3f}" for v in dist.values[i])
            print(f"{region}\t{cells}")
    return 0


def cmd_decay(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    sim_path = _require(outdir / f"similarity_{args.method}.tsv", f"similarity --method {args.method}")
    dist_path = _require(outdir / DISTANCES_ARTIFACT, f"similarity --method {args.method}")
    sim_regions, sim_values = _read_matrix(sim_path)
    dist_regions, dist_values = _read_matrix(dist_path)
    observations = pair_observations(
        SimilarityMatrix(regions=sim_regions, values=sim_values),
        DistanceMatrix(regions=dist_regions, values=dist_values),
    )

    obs_lines = ["region_a\tregion_b\tsimilarity\tdistance_m\tln_s\tln_d"]
    for o in observations:
        ln_s = _fmt(math.log(o.similarity)) if o.similarity > 0 else "NA"
        obs_lines.append(
            f"{o.region_a}\t{o.region_b}\t{_fmt(o.similarity)}\t{_fmt(o.distance_m)}"
            f"\t{ln_s}\t{_fmt(math.log(o.distance_m))}"
        )
    _write_text(outdir / f"decay_observations_{args.method}.tsv", obs_lines)

    distances = [o.distance_m for o in observations]
    similarities = [o.similarity for o in observations]
    p_method = "t_approx" if args.p_method == "t" else "permutation"
    pearson_res = pearson(
        distances, similarities, p_method=p_method,
        permutations=args.permutations, seed=args.seed,
    )
    spearman_res = spearman(
        distances, similarities, p_method=p_method,
        permutations=args.permutations, seed=args.seed,
    )
    fit = fit_distance_decay(observations)

    result_lines = [
        f"method={args.method}",
        f"n={len(observations)}",
        f"pearson={_fmt(pearson_res.coefficient)}",
        f"pearson_p={_fmt(pearson_res.p_value)}",
        f"spearman={_fmt(spearman_res.coefficient)}",
        f"spearman_p={_fmt(spearman_res.p_value)}",
        f"p_method={p_method}",
        f"permutations={args.permutations if p_method == 'permutation' else 0}",
        f"seed={args.seed}",
        f"fit_A={_fmt(fit.intercept)}",
        f"fit_beta={_fmt(fit.slope)}",
        f"fit_r2={_fmt(fit.r_squared)}",
    ]
    _write_text(outdir / f"decay_results_{args.method}.txt", result_lines)
    _write_manifest(
        outdir,
        f"decay_{args.method}",
        {
            "similarity_sha256": _sha256(sim_path),
            "distances_sha256": _sha256(dist_path),
            "method": args.method,
            "p_method": p_method,
            "permutations": args.permutations,
            "seed": args.seed,
            "threads": args.threads,
            "out": args.out,
        },
    )
    for line in result_lines:
        print(line)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poinames",
        description="Localness analysis of point-of-interest names.",
    )
    parser.add_argument("--version", action="version", version=f"poinames {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", required=True, help="artifact directory")

    p_ingest = sub.add_parser("ingest", help="load, validate, and normalize POI records")
    p_ingest.add_argument("--input", required=True, help="newline-delimited JSON records")
    p_ingest.add_argument("--mapping", help="city,state -> region mapping file (TSV)")
    add_out(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_zipf = sub.add_parser("zipf", help="term frequency ranking and log-log fit")
    add_out(p_zipf)
    p_zipf.set_defaults(func=cmd_zipf)

    p_local = sub.add_parser("local-terms", help="top local terms per region")
    add_out(p_local)
    p_local.add_argument("--idf-variant", choices=("pure", "plus-one"), default="pure")
    p_local.add_argument("--top", type=int, default=30, help="terms per region")
    p_local.set_defaults(func=cmd_local_terms)

    p_usage = sub.add_parser("type-usage", help="local-term usage across POI types")
    add_out(p_usage)
    p_usage.add_argument("--idf-variant", choices=("pure", "plus-one"), default="pure")
    p_usage.add_argument("--top", type=int, default=100, help="local terms per region")
    p_usage.add_argument("--min-count", type=int, default=100,
                         help="minimum POIs per category in every region")
    p_usage.add_argument("--count-dedup", action="store_true",
                         help="count deduplicated names instead of raw POIs")
    p_usage.set_defaults(func=cmd_type_usage)

    p_vectors = sub.add_parser("vectors", help="write per-region term vectors")
    add_out(p_vectors)
    p_vectors.add_argument("--mode", choices=("count", "tfidf"), default="count")
    p_vectors.add_argument("--idf-variant", choices=("pure", "plus-one"), default="pure")
    p_vectors.set_defaults(func=cmd_vectors)

    p_embed = sub.add_parser("embed", help="train region/word embeddings")
    add_out(p_embed)
    p_embed.add_argument("--dim", type=int, default=300)
    p_embed.add_argument("--negatives", type=int, default=5)
    p_embed.add_argument("--epochs", type=int, default=20)
    p_embed.add_argument("--learning-rate", type=float, default=0.025)
    p_embed.add_argument("--seed", type=int, default=0)
    p_embed.add_argument("--threads", type=int, default=1,
                         help="1 guarantees determinism (current builds are always sequential)")
    p_embed.set_defaults(func=cmd_embed)

    p_sim = sub.add_parser("similarity", help="pairwise collective similarity and distances")
    add_out(p_sim)
    p_sim.add_argument("--method", choices=VECTOR_METHODS, default="count")
    p_sim.add_argument("--idf-variant", choices=("pure", "plus-one"), default="pure")
    p_sim.add_argument("--km", action="store_true",
                       help="also print the distance matrix in kilometers (files stay in meters)")
    p_sim.set_defaults(func=cmd_similarity)

    p_decay = sub.add_parser("decay", help="correlate similarity with distance and fit decay")
    add_out(p_decay)
    p_decay.add_argument("--method", choices=VECTOR_METHODS, default="count")
    p_decay.add_argument("--p-method", choices=("permutation", "t"), default="permutation")
    p_decay.add_argument("--permutations", type=int, default=DEFAULT_PERMUTATIONS)
    p_decay.add_argument("--seed", type=int, default=0)
    p_decay.add_argument("--threads", type=int, default=1,
                         help="1 guarantees determinism (current builds are always sequential)")
    p_decay.set_defaults(func=cmd_decay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (IngestError, EmptyCorpusError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
