"""Command line interface.

Exit codes: 0 success, 1 data or model error, 2 usage error.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from . import llm_prep
from .config import load_config
from .corpus import Corpus, DocumentRecord, document_text, load_corpus_jsonl, mix_synthetic, write_corpus_jsonl
from .ensemble import merge_runs
from .evaluation import DEFAULT_THRESHOLDS, evaluate_run
from .exceptions import IndexingError
from .hyperopt import optimize_weights
from .project import ProjectRegistry, UnknownProject
from .suggestions import RUN_LIMIT, read_run, write_run
from .vocabulary import load_vocabulary, subset, write_vocabulary_tsv

logger = logging.getLogger("subject_indexer")


def _fail_on_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except UnknownProject as err:
            raise click.UsageError(f"unknown project {err.args[0]!r}") from None
        except (IndexingError, OSError) as err:
            raise click.ClickException(str(err)) from None

    return wrapper


@click.group()
@click.option("-c", "--config", "config_path", default="projects.cfg", show_default=True,
              help="Project configuration file.")
@click.option("--data-dir", default="data", show_default=True, help="Where trained models are stored.")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
@click.pass_context
def cli(ctx, config_path, data_dir, verbose):
    """Automated subject indexing with lexical and label-tree backends."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["data_dir"] = data_dir


def _registry(ctx) -> ProjectRegistry:
    if "registry" not in ctx.obj:
        ctx.obj["registry"] = ProjectRegistry(load_config(ctx.obj["config_path"]), ctx.obj["data_dir"])
    return ctx.obj["registry"]


def _project(ctx, project_id):
    registry = _registry(ctx)
    if project_id not in registry:
        raise UnknownProject(project_id)
    return registry.get(project_id)


def endpoint_options(fn):
    options = [
        click.option("--mock", is_flag=True, help="Use the built-in offline mock endpoint."),
        click.option("--endpoint", "base_url", help="Base URL of an OpenAI-compatible API, e.g. http://localhost:8000/v1"),
        click.option("--model", default="gpt-4o-mini", show_default=True, help="Model name sent to the endpoint."),
        click.option("--api-key-env", default="OPENAI_API_KEY", show_default=True,
                     help="Environment variable holding the API key."),
        click.option("--max-in-flight", default=4, show_default=True, type=click.IntRange(min=1)),
        click.option("--timeout", default=120.0, show_default=True, type=float),
        click.option("--retries", default=3, show_default=True, type=click.IntRange(min=0)),
        click.option("--term-map", type=click.Path(exists=True, dir_okay=False),
                     help="Mock only: TSV of German<TAB>English term translations."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _endpoint(mock, base_url, model, api_key_env, max_in_flight, timeout, retries, term_map):
    if mock == bool(base_url):
        raise click.UsageError("give exactly one of --mock or --endpoint")
    if mock:
        terms = {}
        if term_map:
            with open(term_map, encoding="utf-8") as f:
                for line in f:
                    if "\t" in line:
                        de, en = line.rstrip("\n").split("\t", 1)
                        terms[de] = en
        return llm_prep.MockEndpoint(terms, max_in_flight)
    config = llm_prep.LlmEndpointConfig(
        base_url=base_url,
        model=model,
        api_key_env=api_key_env,
        max_in_flight=max_in_flight,
        timeout=timeout,
        retries=retries,
    )
    return llm_prep.ChatCompletionsEndpoint(config)


def _parse_thresholds(value: str) -> list[int]:
    try:
        thresholds = [int(t) for t in value.split(",") if t.strip()]
    except ValueError:
        raise click.BadParameter(f"not a comma-separated list of integers: {value!r}") from None
    if not thresholds or min(thresholds) < 1:
        raise click.BadParameter("thresholds must be positive")
    return thresholds


@cli.command("load-vocab")
@click.argument("vocab_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--variant", default="all", show_default=True)
@click.option("--subset", "subset_path", type=click.Path(exists=True, dir_okay=False),
              help="File of subject ids to keep.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the vocabulary as TSV.")
@_fail_on_errors
def load_vocab_cmd(vocab_path, variant, subset_path, out):
    """Load a TSV or N-Triples vocabulary and print statistics."""
    vocab = load_vocabulary(vocab_path, variant)
    if subset_path:
        vocab, warnings = subset(vocab, subset_path, variant)
        for w in warnings:
            click.echo(f"warning: {w}", err=True)
    click.echo(f"variant {vocab.variant_name}: {len(vocab)} subjects")
    for lang in vocab.languages:
        n_pref = sum(1 for s in vocab if lang in s.pref_label)
        n_alt = sum(len(s.alt_labels.get(lang, ())) for s in vocab)
        click.echo(f"  {lang}: {n_pref} preferred, {n_alt} alternate labels")
    if out:
        write_vocabulary_tsv(vocab, out)


@cli.command()
@click.argument("project_id")
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@_fail_on_errors
def train(ctx, project_id, corpus_path):
    """Train PROJECT on a JSONL corpus with gold subjects."""
    project = _project(ctx, project_id)
    corpus = load_corpus_jsonl(corpus_path)
    project.train(corpus)
    click.echo(f"trained {project_id}: {len(corpus)} records, model in {project.model_dir}")


def _suggest_run(project, corpus: Corpus, limit: int, doc_ids=None):
    doc_ids = doc_ids or corpus.ids()
    return {d: project.suggest(document_text(rec), limit) for d, rec in zip(doc_ids, corpus)}


@cli.command()
@click.argument("project_id")
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--limit", default=RUN_LIMIT, show_default=True, type=click.IntRange(min=0))
@click.option("--out", type=click.Path(dir_okay=False), help="Run file (default runs/<project>.tsv).")
@click.pass_context
@_fail_on_errors
def suggest(ctx, project_id, corpus_path, limit, out):
    """Write a run file with up to LIMIT suggestions per record."""
    project = _project(ctx, project_id)
    corpus = load_corpus_jsonl(corpus_path)
    out = Path(out or Path("runs") / f"{project_id}.tsv")
    out.parent.mkdir(parents=True, exist_ok=True)
    run = _suggest_run(project, corpus, limit) if len(corpus) else {}
    write_run(run, out, limit)
    click.echo(f"wrote {out} ({len(run)} documents)")


@cli.command("eval")
@click.argument("run_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("gold_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--thresholds", default=",".join(map(str, DEFAULT_THRESHOLDS)), show_default=True,
              help="Comma-separated cutoffs for P/R/F1 and average recall.")
@click.option("--json", "json_path", type=click.Path(dir_okay=False), help="Also write the report as JSON.")
@_fail_on_errors
def eval_cmd(run_path, gold_path, thresholds, json_path):
    """Evaluate a run file against a gold corpus."""
    thresholds = _parse_thresholds(thresholds)
    run = read_run(run_path)
    gold = load_corpus_jsonl(gold_path)
    report = evaluate_run(run, gold, thresholds)
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)
    click.echo(report.format_table())
    if json_path:
        Path(json_path).parent.mkdir(parents=True, exist_ok=True)
        Path(json_path).write_text(report.to_json(), encoding="utf-8")


@cli.command()
@click.argument("project_id")
@click.argument("dev_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--trials", default=100, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True)
@click.pass_context
@_fail_on_errors
def hyperopt(ctx, project_id, dev_path, trials, seed):
    """Search ensemble weights maximizing nDCG@10 on a development corpus."""
    project = _project(ctx, project_id)
    if not project.backend.is_ensemble:
        raise click.UsageError(f"project {project_id!r} is not an ensemble")
    members = project.members()
    dev = load_corpus_jsonl(dev_path)

    def log(trial):
        weights = " ".join(f"{w:.4f}" for w in trial.weights)
        click.echo(f"trial {trial.number:4d}  weights {weights}  nDCG@10 {trial.score:.4f}")

    suggesters = [lambda text, m=m: m.suggest(text, 100) for m in members]
    result = optimize_weights(suggesters, dev, trials, seed, log)
    click.echo(f"best nDCG@10 {result.score:.4f}")
    click.echo("sources = " + ", ".join(f"{m.id}:{w:.4f}" for m, w in zip(members, result.weights)))


@cli.command()
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--language", "target", type=click.Choice(["de", "en"]), required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@endpoint_options
@_fail_on_errors
def translate(corpus_path, target, out, **endpoint_args):
    """Translate every record of a corpus into one language."""
    endpoint = _endpoint(**endpoint_args)
    corpus = llm_prep.translate_corpus(load_corpus_jsonl(corpus_path), target, endpoint)
    write_corpus_jsonl(corpus, out)
    click.echo(f"wrote {out} ({len(corpus)} records)")


@cli.command("translate-vocab")
@click.argument("vocab_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--batch-size", default=llm_prep.TERM_BATCH_SIZE, show_default=True, type=click.IntRange(min=1))
@endpoint_options
@_fail_on_errors
def translate_vocab(vocab_path, out, batch_size, **endpoint_args):
    """Translate German preferred labels into English ones."""
    endpoint = _endpoint(**endpoint_args)
    vocab = llm_prep.translate_vocabulary(load_vocabulary(vocab_path), endpoint, batch_size)
    write_vocabulary_tsv(vocab, out)
    click.echo(f"wrote {out} ({len(vocab)} subjects)")


@cli.command()
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("vocab_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Mixed corpus: the originals followed by every synthetic part.")
@click.option("--parts", default=3, show_default=True, type=click.IntRange(min=0))
@click.option("--seed", default=0, show_default=True)
@endpoint_options
@_fail_on_errors
def synthesize(corpus_path, vocab_path, out, parts, seed, **endpoint_args):
    """Generate synthetic records, one per original record and part."""
    endpoint = _endpoint(**endpoint_args)
    original = load_corpus_jsonl(corpus_path)
    vocab = load_vocabulary(vocab_path)
    mixed = mix_synthetic(original, llm_prep.synthesize_parts(original, vocab, endpoint, parts, seed))
    write_corpus_jsonl(mixed, out)
    click.echo(f"wrote {out} ({len(original)} original + {len(mixed) - len(original)} synthetic records)")


@cli.command("merge-runs")
@click.argument("run_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("run_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--limit", default=RUN_LIMIT, show_default=True, type=click.IntRange(min=0))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_fail_on_errors
def merge_runs_cmd(run_a, run_b, limit, out):
    """Sum per-subject scores of two runs and keep the top LIMIT per document."""
    merged = merge_runs(read_run(run_a), read_run(run_b), limit)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    write_run(merged, out, limit)
    click.echo(f"wrote {out} ({len(merged)} documents)")


def _train_for_pipeline(project, originals: Corpus, mixed: Corpus, dev: Corpus | None, done: set):
    """Train a project and, for ensembles, its members first.

    Tree backends learn from the mixed corpus with synthetic records; the
    lexical backend needs little data and uses the originals only.
    """
    if project.id in done:
        return
    if project.backend.is_ensemble:
        for member in project.members():
            _train_for_pipeline(member, originals, mixed, dev, done)
        if project.backend.trainable:
            if dev is None:
                raise click.UsageError(f"{project.id!r} is a neural ensemble; pass --dev")
            project.train(dev)
    else:
        project.train(mixed if project.config.backend == "tree" else originals)
    done.add(project.id)
    click.echo(f"  trained {project.id}")


@cli.command()
@click.option("--train", "train_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dev", "dev_path", type=click.Path(exists=True, dir_okay=False),
              help="Development corpus, needed to train neural ensembles.")
@click.option("--project-de", required=True, help="German project producing the German run.")
@click.option("--project-en", required=True, help="English project producing the English run.")
@click.option("--parts", default=3, show_default=True, type=click.IntRange(min=0),
              help="Synthetic parts per original training record.")
@click.option("--seed", default=0, show_default=True)
@click.option("--limit", default=RUN_LIMIT, show_default=True, type=click.IntRange(min=1))
@click.option("--work-dir", default=".", show_default=True, type=click.Path(file_okay=False),
              help="Receives corpora/, runs/ and reports/.")
@endpoint_options
@click.pass_context
@_fail_on_errors
def pipeline(ctx, train_path, test_path, dev_path, project_de, project_en, parts, seed, limit, work_dir,
             **endpoint_args):
    """Translate, synthesize, train, suggest, merge and evaluate end to end."""
    endpoint = _endpoint(**endpoint_args)
    work = Path(work_dir)
    for sub in ("corpora", "runs", "reports"):
        (work / sub).mkdir(parents=True, exist_ok=True)
    train_corpus = load_corpus_jsonl(train_path)
    test_corpus = load_corpus_jsonl(test_path)
    dev_corpus = load_corpus_jsonl(dev_path) if dev_path else None
    projects = {"de": _project(ctx, project_de), "en": _project(ctx, project_en)}

    runs = {}
    for lang, project in projects.items():
        if project.config.language != lang:
            raise click.UsageError(f"project {project.id!r} is not a {lang} project")
        click.echo(f"[{lang}] translating")
        train_t = llm_prep.translate_corpus(train_corpus, lang, endpoint)
        test_t = llm_prep.translate_corpus(test_corpus, lang, endpoint)
        dev_t = llm_prep.translate_corpus(dev_corpus, lang, endpoint) if dev_corpus else None
        vocab = _first_vocabulary(project)
        click.echo(f"[{lang}] synthesizing {parts} part(s)")
        mixed = mix_synthetic(train_t, llm_prep.synthesize_parts(train_t, vocab, endpoint, parts, seed))
        write_corpus_jsonl(train_t, work / "corpora" / f"train-{lang}.jsonl")
        write_corpus_jsonl(mixed, work / "corpora" / f"train-{lang}-mixed.jsonl")
        write_corpus_jsonl(test_t, work / "corpora" / f"test-{lang}.jsonl")
        click.echo(f"[{lang}] training")
        _train_for_pipeline(project, train_t, mixed, dev_t, set())
        runs[lang] = _suggest_run(project, test_t, limit, test_corpus.ids())
        write_run(runs[lang], work / "runs" / f"{project.id}.tsv", limit)

    runs["de+en"] = merge_runs(runs["de"], runs["en"], limit)
    write_run(runs["de+en"], work / "runs" / "merged.tsv", limit)

    click.echo(f"{'run':<8} {'F1@5':>7} {'nDCG@10':>8} {'avg recall':>11}")
    for name, run in runs.items():
        report = evaluate_run(run, test_corpus)
        (work / "reports" / f"{name}.json").write_text(report.to_json(), encoding="utf-8")
        click.echo(f"{name:<8} {report['F1@5']:7.4f} {report['nDCG@10']:8.4f} {report['average_recall']:11.4f}")


def _first_vocabulary(project):
    if project.config.vocab is not None:
        return project.vocabulary
    for member in project.members():
        if member.config.vocab is not None:
            return member.vocabulary
    raise click.UsageError(f"project {project.id!r} has no vocabulary")


@cli.command("generate-fixtures")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@_fail_on_errors
def generate_fixtures(out_dir, seed):
    """Write a small synthetic vocabulary and train/dev/test corpora."""
    from .fixtures import bilingual_fixture

    out = Path(out_dir)
    (out / "vocab").mkdir(parents=True, exist_ok=True)
    (out / "corpus").mkdir(parents=True, exist_ok=True)
    fx = bilingual_fixture(n_train=240, n_test=60, seed=seed)
    write_vocabulary_tsv(fx.vocab, out / "vocab" / "gnd-all.tsv")
    core = fx.vocab.ids()[: len(fx.vocab) * 3 // 4]
    (out / "vocab" / "core-ids.txt").write_text("\n".join(core) + "\n", encoding="utf-8")

    def originals(de: Corpus, en: Corpus) -> list[DocumentRecord]:
        # bilingual records: German text as title, English text as abstract
        return [
            DocumentRecord(d.id, "de", f"{d.title} {d.abstract}", f"{e.title} {e.abstract}", d.subjects)
            for d, e in zip(de, en)
        ]

    train_records = originals(fx.train_de, fx.train_en)
    write_corpus_jsonl(Corpus(train_records[:200]), out / "corpus" / "train.jsonl")
    write_corpus_jsonl(Corpus(train_records[200:]), out / "corpus" / "dev.jsonl")
    write_corpus_jsonl(Corpus(originals(fx.test_de, fx.test_en)), out / "corpus" / "test.jsonl")
    click.echo(f"wrote fixtures to {out}")


def main(argv=None):
    return cli.main(args=argv, prog_name="subject-indexer")


if __name__ == "__main__":
    sys.exit(main())
