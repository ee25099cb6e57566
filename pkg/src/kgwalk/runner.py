"""Experiment orchestration: config loading, per-item pipeline, outputs.

One config file is one cell of the experiment grid. Everything a run
writes lands in the output directory:

    config.json    resolved copy of the config
    manifest.json  config digest, seed, input paths
    journal.jsonl  generation journal (request order, resumable)
    chains.jsonl   walk-chain manifest, for graph regimes
    results.jsonl  per-item verdicts
    summary.json   accuracy, reason histogram, config digest

Reruns against an existing directory verify the digest, skip journaled
items, and end with byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass

from . import evaluator, llmclient, promptbuild
from .embedindex import load_vectors
from .errors import ConfigError, DataError
from .evaluator import QAItem, Verdict, load_dataset, score_response, summarize
from .kgstore import KnowledgeGraph
from .llmclient import GenRequest, HttpBackend, Journal, MockBackend, ReplayBackend
from .promptbuild import (
    BASELINE,
    BuiltContext,
    ExperimentSetting,
    IndexBundle,
    render_prompt,
)
from .rng import derive_seed, derived_rng
from .walker import ChainShape

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
DEFAULT_CHAIN_RETRIES = 8


@dataclass
class ExperimentConfig:
    raw: dict
    setting: ExperimentSetting
    seed: int
    dataset: str
    graph_dump: str | None
    graph_language: str
    index_specs: dict
    backend_spec: dict
    max_new_tokens: int
    temperature: float
    parallelism: int
    max_chain_retries: int

    @property
    def digest(self) -> str:
        canonical = json.dumps(
            self.raw, sort_keys=True, separators=(",", ":"), ensure_ascii=False
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    version = raw.get("version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}")
    unknown = set(raw) - {
        "version", "regime", "k", "k_retrieved", "shape", "order", "relevance",
        "direction_mode", "permutation", "anchor_query", "seed", "dataset",
        "graph", "indexes", "backend", "generation", "parallelism",
        "max_chain_retries",
    }
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    try:
        shape_text = raw.get("shape")
        setting = ExperimentSetting(
            regime=raw["regime"],
            k=int(raw.get("k", 0)),
            order=raw.get("order", promptbuild.DOCS_FIRST),
            shape=ChainShape.parse(shape_text) if shape_text else None,
            relevance=raw.get("relevance", "N"),
            direction_mode=raw.get("direction_mode", "regular"),
            permutation=raw.get("permutation"),
            anchor_query=raw.get("anchor_query", "concept"),
            k_retrieved=int(raw.get("k_retrieved", 1)),
        )
        dataset = raw["dataset"]
    except KeyError as exc:
        raise ConfigError(f"config is missing required field {exc}") from exc
    graph_spec = raw.get("graph") or {}
    backend_spec = raw.get("backend")
    if not isinstance(backend_spec, dict) or "kind" not in backend_spec:
        raise ConfigError("config needs a backend object with a 'kind'")
    generation = raw.get("generation") or {}
    return ExperimentConfig(
        raw=raw,
        setting=setting,
        seed=int(raw.get("seed", 0)),
        dataset=dataset,
        graph_dump=graph_spec.get("dump"),
        graph_language=graph_spec.get("language", "en"),
        index_specs=raw.get("indexes") or {},
        backend_spec=backend_spec,
        max_new_tokens=int(generation.get("max_new_tokens", 32)),
        temperature=float(generation.get("temperature", 0.0)),
        parallelism=int(raw.get("parallelism", 1)),
        max_chain_retries=int(raw.get("max_chain_retries", DEFAULT_CHAIN_RETRIES)),
    )


def build_backend(spec: dict):
    kind = spec.get("kind")
    if kind == "mock":
        return MockBackend(text=spec.get("text"))
    if kind == "replay":
        if "path" not in spec:
            raise ConfigError("replay backend needs a 'path'")
        return ReplayBackend(spec["path"])
    if kind == "http":
        return HttpBackend(
            endpoint=spec.get("endpoint", ""),
            headers=spec.get("headers"),
            request_fields=spec.get("request_fields"),
            response_field=spec.get("response_field", "text"),
            timeout=float(spec.get("timeout", 60.0)),
            max_attempts=int(spec.get("max_attempts", 3)),
            backoff_s=float(spec.get("backoff_s", 0.5)),
        )
    raise ConfigError(f"unknown backend kind {kind!r}")


def _load_index(spec, kind: str):
    if isinstance(spec, str):
        return load_vectors(spec, kind=kind)
    if isinstance(spec, dict) and "path" in spec:
        return load_vectors(spec["path"], mode=spec.get("mode", "ram"), kind=kind)
    raise ConfigError(f"bad index spec for {kind}: {spec!r}")


def load_indexes(specs: dict) -> IndexBundle:
    bundle = IndexBundle()
    for name in ("node_labels", "sentences", "queries"):
        if name in specs:
            setattr(bundle, name, _load_index(specs[name], kind=name))
    unknown = set(specs) - {"node_labels", "sentences", "queries"}
    if unknown:
        raise ConfigError(f"unknown index names: {sorted(unknown)}")
    return bundle


def build_item_context(config: ExperimentConfig, item: QAItem,
                       graph: KnowledgeGraph | None,
                       indexes: IndexBundle) -> BuiltContext:
    """Build the context, reseeding up to max_chain_retries times when the
    walk truncates; after that, keep the longest chain seen and log it."""
    best: BuiltContext | None = None
    for attempt in range(config.max_chain_retries + 1):
        parts = (item.id,) if attempt == 0 else (item.id, attempt)
        rng = derived_rng(config.seed, *parts)
        ctx = promptbuild.build_context(config.setting, item, graph, indexes, rng)
        if ctx.chain is not None:
            ctx.chain.seed = derive_seed(config.seed, *parts)
        if ctx.chain is None or not ctx.chain.truncated:
            return ctx
        if best is None or len(ctx.chain.steps) > len(best.chain.steps):
            best = ctx
    log.warning(
        "item %s: chain still truncated after %d reseeds, emitting %d sentences",
        item.id, config.max_chain_retries, len(best.sentences),
    )
    return best


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))
        fh.write("\n")


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def run_experiment(config: ExperimentConfig, out_dir,
                   parallelism: int | None = None) -> dict:
    """Execute one run end to end; returns the summary dict."""
    digest = config.digest
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.json")
    if os.path.exists(manifest_path):
        with open(manifest_path, "r", encoding="utf-8") as fh:
            previous = json.load(fh)
        if previous.get("config_digest") != digest:
            raise DataError(
                f"{out_dir} holds a run with a different config digest; "
                "refusing to mix runs"
            )

    items = load_dataset(config.dataset)
    graph = None
    if config.setting.regime != BASELINE:
        if not config.graph_dump:
            raise ConfigError(
                f"regime {config.setting.regime} requires graph.dump in the config"
            )
        graph = KnowledgeGraph()
        graph.ingest_conceptnet(config.graph_dump, config.graph_language)
    indexes = load_indexes(config.index_specs)
    backend = build_backend(config.backend_spec)

    contexts = [build_item_context(config, item, graph, indexes) for item in items]
    prompts = [
        render_prompt(item, ctx.sentences, config.setting.order)
        for item, ctx in zip(items, contexts)
    ]
    requests_all = [
        GenRequest(
            item_id=item.id,
            prompt=prompt.text,
            max_new_tokens=config.max_new_tokens,
            temperature=config.temperature,
        )
        for item, prompt in zip(items, prompts)
    ]

    journal = Journal(os.path.join(out_dir, "journal.jsonl"))
    existing = journal.load()
    for request in requests_all:
        record = existing.get(request.item_id)
        if record and record["prompt_hash"] != llmclient.prompt_hash(request.prompt):
            raise DataError(
                f"journal entry for {request.item_id} was generated from a "
                "different prompt; delete the journal to regenerate"
            )
    to_run = [r for r in requests_all if r.item_id not in existing]
    workers = parallelism if parallelism is not None else config.parallelism
    batch = llmclient.run_batch(to_run, backend, parallelism=workers,
                                journal=journal)
    errors = {b.item_id: b.error for b in batch if b.error}
    if errors:
        log.warning("%d item(s) failed generation: %s",
                    len(errors), sorted(errors))

    journal_records = journal.load()
    verdicts = []
    for item in items:
        record = journal_records.get(item.id)
        if record is None:
            verdicts.append(Verdict(item.id, False, evaluator.ERROR_FLAGGED))
        else:
            verdicts.append(score_response(record["text"], item))

    _write_jsonl(
        os.path.join(out_dir, "results.jsonl"),
        (
            {"item_id": v.item_id, "correct": v.correct, "reason": v.reason}
            for v in verdicts
        ),
    )
    chain_records = [
        ctx.chain.manifest_record(item.id)
        for item, ctx in zip(items, contexts)
        if ctx.chain is not None
    ]
    if chain_records:
        _write_jsonl(os.path.join(out_dir, "chains.jsonl"), chain_records)

    summary = summarize(verdicts, config_digest=digest)
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    _write_json(os.path.join(out_dir, "config.json"), config.raw)
    _write_json(
        manifest_path,
        {
            "config_digest": digest,
            "seed": config.seed,
            "dataset": config.dataset,
            "indexes": config.index_specs,
            "backend": config.backend_spec.get("kind"),
            "journal": "journal.jsonl",
        },
    )
    return summary


def rescore(journal_path, dataset_path) -> tuple[dict, list[Verdict]]:
    """Re-score an existing journal without touching any backend."""
    items = load_dataset(dataset_path)
    records = Journal(journal_path).load()
    item_ids = {item.id for item in items}
    for item in items:
        if item.id not in records:
            raise DataError(f"journal {journal_path} is missing item {item.id!r}")
    for rec_id in records:
        if rec_id not in item_ids:
            raise DataError(
                f"journal {journal_path} has item {rec_id!r} not in the dataset"
            )
    verdicts = [score_response(records[item.id]["text"], item) for item in items]
    return summarize(verdicts), verdicts
