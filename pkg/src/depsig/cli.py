"""Command-line front end.

Subcommands: ingest, lexicon validate, features, topics fit|flag, train,
evaluate, similarity, trend, pipeline run, synth. Exit codes: 0 success,
1 validation error (bad config, bad input files, usage), 2 runtime
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline as pipeline_mod
from .config import parse_config
from .errors import ConfigError, CorpusError, DepsigError, LexiconFormatError, PipelineError
from .features import assemble_features
from .lexicon import (
    parse_category_dictionary,
    parse_emotion_lexicon,
    parse_psycholinguistic_db,
    parse_term_list,
)
from .models import save_model as save_supervised_model
from .similarity import load_synonym_map
from .synth import SynthConfig, write_demo

VALIDATION_ERRORS = (ConfigError, CorpusError, LexiconFormatError)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(parser, config_required=True):
    parser.add_argument("--config", required=config_required,
                        help="pipeline config file (YAML)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output dir")
    parser.add_argument("--strict", action="store_true", default=True,
                        help="reject unknown config keys (default)")
    parser.add_argument("--lenient", dest="strict", action="store_false",
                        help="tolerate unknown config keys")


def _load_config(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["paths.out"] = args.out
    return parse_config(args.config, strict=args.strict, overrides=overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depsig",
                     description="Depression-signal analytics pipeline")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="load, filter, and re-emit the corpus")
    _add_common(p)
    p.set_defaults(handler=cmd_ingest)

    lex = sub.add_parser("lexicon", help="lexicon utilities")
    lex_sub = lex.add_subparsers(dest="lexicon_command", required=True,
                                 parser_class=_Parser)
    p = lex_sub.add_parser("validate", help="parse all configured lexicons")
    _add_common(p)
    p.set_defaults(handler=cmd_lexicon_validate)

    p = sub.add_parser("features", help="extract feature matrices to CSV")
    _add_common(p)
    p.set_defaults(handler=cmd_features)

    topics = sub.add_parser("topics", help="topic-model utilities")
    topics_sub = topics.add_subparsers(dest="topics_command", required=True,
                                       parser_class=_Parser)
    p = topics_sub.add_parser("fit", help="fit LDA models (global or per window)")
    _add_common(p)
    p.set_defaults(handler=cmd_topics_fit)
    p = topics_sub.add_parser("flag", help="flag depression-indicative topics")
    _add_common(p)
    p.set_defaults(handler=cmd_topics_flag)

    p = sub.add_parser("train", help="train one model on assembled features")
    _add_common(p)
    p.add_argument("--feature-set", default="LIWC+PLUS+bigram+LDA")
    p.add_argument("--model", default="elastic_net",
                   choices=["elastic_net", "logistic", "svm", "forest"])
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="run the configured evaluation protocol")
    _add_common(p)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("similarity", help="cross-window topic similarity report")
    _add_common(p)
    p.set_defaults(handler=cmd_similarity)

    p = sub.add_parser("trend", help="participation trend report")
    _add_common(p)
    p.set_defaults(handler=cmd_trend)

    pipe = sub.add_parser("pipeline", help="full pipeline")
    pipe_sub = pipe.add_subparsers(dest="pipeline_command", required=True,
                                   parser_class=_Parser)
    p = pipe_sub.add_parser("run", help="run every configured stage")
    _add_common(p)
    p.set_defaults(handler=cmd_pipeline_run)

    p = sub.add_parser("synth", help="write a synthetic demo workspace")
    p.add_argument("--out", required=True)
    p.add_argument("--docs", type=int, default=5000)
    p.add_argument("--weeks", type=int, default=6)
    p.add_argument("--users", type=int, default=250)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["shared", "disjoint"], default="shared")
    p.set_defaults(handler=cmd_synth)

    return parser


def _run_stages(cfg, upto):
    """Run pipeline stages through `upto` and return the state."""
    state = pipeline_mod.PipelineState(cfg=cfg,
                                       emitter=pipeline_mod._Emitter(cfg.out_dir))
    order = ["ingest", "filter", "window", "lexicons", "features", "topics"]
    fns = {
        "ingest": pipeline_mod._stage_ingest,
        "filter": pipeline_mod._stage_filter,
        "window": pipeline_mod._stage_window,
        "lexicons": pipeline_mod._stage_lexicons,
        "features": pipeline_mod._stage_features,
        "topics": pipeline_mod._stage_topics,
    }
    for name in order[:order.index(upto) + 1]:
        try:
            fns[name](state)
        except VALIDATION_ERRORS:
            raise
        except Exception as exc:
            raise PipelineError(name, exc) from exc
    return state


def cmd_ingest(args):
    cfg = _load_config(args)
    state = _run_stages(cfg, "filter")
    print(f"kept {len(state.corpus)} posts -> {cfg.out_dir / 'filtered.jsonl'}")
    return 0


def cmd_lexicon_validate(args):
    cfg = _load_config(args)
    paths = cfg.lexicon_paths
    liwc = parse_category_dictionary(paths["liwc"])
    nrc = parse_emotion_lexicon(paths["nrc"])
    mrc = parse_psycholinguistic_db(paths["mrc"])
    who = parse_term_list(paths["who"])
    print(f"category dictionary: {len(liwc.categories)} categories, "
          f"{len(liwc.entries)} entries")
    print(f"emotion lexicon: {len(nrc.associations)} words")
    print(f"psycholinguistic db: {len(mrc.records)} words, "
          f"{len(mrc.properties)} properties")
    print(f"term list: {len(who)} terms")
    if "synonyms" in paths:
        synonyms = load_synonym_map(paths["synonyms"])
        print(f"synonym map: {len(synonyms.mapping)} rules")
    print("all lexicons parsed cleanly")
    return 0


def cmd_features(args):
    cfg = _load_config(args)
    state = _run_stages(cfg, "features")
    for family, matrix in state.families.items():
        path = cfg.out_dir / f"features_{family.lower()}.csv"
        matrix.to_csv(path)
        print(f"{family}: {matrix.shape[0]} x {matrix.shape[1]} -> {path}")
    return 0


def cmd_topics_fit(args):
    cfg = _load_config(args)
    state = _run_stages(cfg, "topics")
    if state.global_model is not None:
        print(f"global model: K={state.global_model.K} -> "
              f"{cfg.out_dir / 'topics_global.json'}")
    for entry in state.window_models:
        window = entry["window"]
        print(f"window {window.index}: K={entry['model'].K}, "
              f"{len(entry['flagged'])} flagged topics")
    return 0


def cmd_topics_flag(args):
    cfg = _load_config(args)
    state = _run_stages(cfg, "topics")
    if state.global_summaries:
        flagged = sorted(s.topic_id for s in state.global_summaries
                         if s.depression_flag)
        print(f"global model: heuristic-flagged topics {flagged}")
        for s in state.global_summaries:
            if s.depression_flag:
                print(f"  topic {s.topic_id}: {', '.join(sorted(s.matched_terms))}")
    for entry in state.window_models:
        window = entry["window"]
        flagged = sorted(entry["flagged"])
        print(f"window {window.index}: heuristic-flagged topics {flagged}")
        for s in entry["summaries"]:
            if s.depression_flag:
                print(f"  topic {s.topic_id}: {', '.join(sorted(s.matched_terms))}")
    return 0


def cmd_train(args):
    cfg = _load_config(args)
    state = _run_stages(cfg, "topics")
    from .pipeline import _doc_labels, _binarize, _model_spec
    from .topics import doc_topic_proportions

    if state.global_model is None:
        raise ConfigError("train uses the kfold protocol's global topic model; "
                          "set evaluation.protocol: kfold")
    parts = dict(state.families, LDA=doc_topic_proportions(state.global_model))
    X = assemble_features(parts, args.feature_set)
    y = _doc_labels(state)
    if args.model != "elastic_net":
        y = _binarize(y, cfg.label_threshold).astype(float)
    spec = _model_spec(state, args.model)
    from .evaluation import _fit_spec

    model = _fit_spec(spec, X.values, y)
    out = cfg.out_dir / f"model_{args.model}.json"
    save_supervised_model(model, out)
    print(f"trained {args.model} on {X.shape[0]} x {X.shape[1]} "
          f"({args.feature_set}) -> {out}")
    return 0


def cmd_evaluate(args):
    cfg = _load_config(args)
    cfg.stages = ["evaluate"]
    pipeline_mod.run_pipeline(cfg)
    name = ("regression_report.csv" if cfg.protocol == "kfold"
            else "temporal_f1.csv")
    print(f"evaluation reports -> {cfg.out_dir / name}")
    return 0


def cmd_similarity(args):
    cfg = _load_config(args)
    cfg.stages = ["similarity"]
    pipeline_mod.run_pipeline(cfg)
    print(f"similarity reports -> {cfg.out_dir / 'similarity.json'}")
    return 0


def cmd_trend(args):
    cfg = _load_config(args)
    cfg.stages = ["trend"]
    pipeline_mod.run_pipeline(cfg)
    print(f"trend reports -> {cfg.out_dir / 'trend_monthly.csv'}")
    return 0


def cmd_pipeline_run(args):
    cfg = _load_config(args)
    manifest = pipeline_mod.run_pipeline(cfg)
    print(f"pipeline complete: {len(manifest['files'])} report files in "
          f"{cfg.out_dir} (manifest.json has hashes)")
    return 0


def cmd_synth(args):
    cfg = SynthConfig(n_docs=args.docs, weeks=args.weeks, n_users=args.users,
                      seed=args.seed, depression_mode=args.mode)
    config_path = write_demo(Path(args.out), cfg)
    print(f"demo workspace ready: depsig pipeline run --config {config_path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DepsigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
