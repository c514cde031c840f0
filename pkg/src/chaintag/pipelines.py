"""The three learning strategies as named, reproducible configurations.

Direct: one CRF learns the target level from morphological feature
columns.  Cascade: three CRFs learn L0, then L1 with the L0 result as an
extra column, then L2 with both results.  Decomposed: four CRFs learn the
tag components g0..g3 independently; a fifth CRF or the symbolic
composition rules recombine them into a full tag.

Every runner builds explicit training views (observation columns in
recipe order, label last), so gold labels can never leak into feature
extraction, and returns the test corpus with prediction columns appended
(ResL0/ResL01/ResL012 for cascades, ResG0..ResG3 and ResL2 for
decomposition, Res<level> for direct runs).
"""

from __future__ import annotations

import configparser
import time
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus, append_column, select_columns, select_sentences
from .crf import (
    LinearChainModel,
    TrainingConfig,
    marginals,
    tag,
    train,
)
from .errors import (
    PipelineConfigError,
    UndecomposableTagError,
    UnknownTagError,
)
from .evaluation import kfold_split
from .morphology import RECIPES, FeatureRecipe, materialize_recipe, parse_recipe
from .tagschema import (
    TagSchema,
    decompose,
    project_tag,
    repair,
    symbol_to_text,
)
from .templates import default_templates, parse_templates, template_hash

STRATEGIES = ("direct", "cascade", "decomposed")
STAGE_SOURCES = ("jackknifed", "gold", "predicted")
COMPONENT_RECIPE_WITH_LEMMA = "mot,lemme,D3(mot)"
COMPONENT_RECIPE_WITHOUT_LEMMA = "mot,D3(mot),D2(mot),D1(mot)"


@dataclass(frozen=True)
class PipelineSpec:
    id: str
    strategy: str
    recipe: FeatureRecipe
    target: str = "L2"
    recombination: str | None = None  # "crf" | "rules" for decomposed
    recombiner_recipe: FeatureRecipe | None = None
    stage_source: str = "jackknifed"
    jackknife_folds: int = 5
    config: TrainingConfig = field(default_factory=TrainingConfig)
    seed: int = 0
    label_column: str = "tag"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise PipelineConfigError("unknown strategy %r" % self.strategy)
        if self.stage_source not in STAGE_SOURCES:
            raise PipelineConfigError("unknown stage source %r" % self.stage_source)
        if self.target not in ("L0", "L1", "L2"):
            raise PipelineConfigError("unknown target %r" % self.target)
        if self.strategy == "decomposed":
            if self.recombination not in ("crf", "rules"):
                raise PipelineConfigError(
                    "decomposed pipelines need recombination crf or rules"
                )
            if self.recombination == "crf" and self.recombiner_recipe is None:
                raise PipelineConfigError("crf recombination needs a recipe")
        elif self.recombination is not None:
            raise PipelineConfigError(
                "recombination only applies to decomposed pipelines"
            )
        if self.jackknife_folds < 2:
            raise PipelineConfigError("jackknife needs at least 2 folds")


NAMED_PIPELINES: dict[str, PipelineSpec] = {}
for _id in ("I", "II", "III", "IV", "IIIbis", "IVbis"):
    NAMED_PIPELINES[_id] = PipelineSpec(_id, "direct", RECIPES[_id])
NAMED_PIPELINES["V"] = PipelineSpec(
    "V", "cascade", parse_recipe("mot,lemme,D3(lemme)")
)
NAMED_PIPELINES["VI"] = PipelineSpec(
    "VI", "cascade", parse_recipe("mot,Rmot,Rlemme,D3(mot),D3(lemme)")
)
NAMED_PIPELINES["VII"] = PipelineSpec(
    "VII", "decomposed", parse_recipe(COMPONENT_RECIPE_WITH_LEMMA),
    recombination="crf", recombiner_recipe=parse_recipe("mot,lemme"),
)
NAMED_PIPELINES["VIIbis"] = PipelineSpec(
    "VIIbis", "decomposed", parse_recipe(COMPONENT_RECIPE_WITHOUT_LEMMA),
    recombination="crf", recombiner_recipe=parse_recipe("mot"),
)
NAMED_PIPELINES["VIII"] = PipelineSpec(
    "VIII", "decomposed", parse_recipe(COMPONENT_RECIPE_WITH_LEMMA),
    recombination="rules",
)
NAMED_PIPELINES["VIIIbis"] = PipelineSpec(
    "VIIIbis", "decomposed", parse_recipe(COMPONENT_RECIPE_WITHOUT_LEMMA),
    recombination="rules",
)


def named_pipeline(pipeline_id: str, **overrides) -> PipelineSpec:
    try:
        spec = NAMED_PIPELINES[pipeline_id]
    except KeyError:
        raise PipelineConfigError(
            "unknown pipeline %r (have %s)"
            % (pipeline_id, ", ".join(sorted(NAMED_PIPELINES)))
        ) from None
    return replace(spec, **overrides) if overrides else spec


@dataclass(frozen=True)
class StagePrediction:
    stage: str
    values: tuple[str, ...]
    source: str  # "gold" | "predicted" | "jackknifed"


@dataclass(eq=False)
class PipelineResult:
    corpus: Corpus
    prediction_column: str
    timings: dict[str, float]
    stages: tuple[StagePrediction, ...]
    models: dict[str, LinearChainModel]
    template_hashes: dict[str, str]
    audit: tuple[str, ...]


class _Clock:
    def __init__(self):
        self.timings = {"features": 0.0, "train": 0.0, "tag": 0.0}
        self._t0 = None
        self._phase = None

    def start(self, phase: str):
        self._phase = phase
        self._t0 = time.perf_counter()

    def stop(self):
        self.timings[self._phase] += time.perf_counter() - self._t0
        self._phase = None


def _flat(values_per_sentence: Sequence[Sequence[str]]) -> list[str]:
    return [v for sentence in values_per_sentence for v in sentence]


def _train_stage(
    view: Corpus, config: TrainingConfig
) -> tuple[LinearChainModel, str]:
    """Train on a view whose last column is the label; returns the model
    and the hash of the generated template set."""
    text = default_templates(range(view.schema.width - 1))
    model = train(view, parse_templates(text), config)
    return model, template_hash(text)


def _tag_view(model: LinearChainModel, view: Corpus) -> list[str]:
    return _flat(tag(model, view))


def jackknife_stage_features(
    view: Corpus, config: TrainingConfig, k: int, seed: int
) -> StagePrediction:
    """Predict the view's label column for every training sentence using
    a model trained on the other internal folds."""
    n = view.n_sentences
    k = min(k, n)
    if k < 2:
        raise PipelineConfigError("jackknifing needs at least 2 sentences")
    label = view.schema.names[-1]
    assignment = kfold_split(view, k, seed)
    per_sentence: dict[int, list[str]] = {}
    for fold in range(k):
        model, _ = _train_stage(
            select_sentences(view, assignment.train_indices(fold)), config
        )
        test_indices = assignment.test_indices(fold)
        held_out = select_columns(
            select_sentences(view, test_indices), view.schema.names[:-1]
        )
        for index, labels in zip(test_indices, tag(model, held_out)):
            per_sentence[index] = labels
    values = _flat(per_sentence[i] for i in range(n))
    return StagePrediction(label, tuple(values), "jackknifed")


def _stage_feature_values(
    view: Corpus,
    model: LinearChainModel,
    spec: PipelineSpec,
    stage_seed: int,
) -> StagePrediction:
    """Training-time values for one predicted-feature column."""
    label = view.schema.names[-1]
    if spec.stage_source == "gold":
        return StagePrediction(label, tuple(view.column(label)), "gold")
    if spec.stage_source == "predicted":
        observed = select_columns(view, view.schema.names[:-1])
        return StagePrediction(label, tuple(_tag_view(model, observed)), "predicted")
    return jackknife_stage_features(
        view, spec.config, spec.jackknife_folds, stage_seed
    )


def _materialized(corpus: Corpus, recipe: FeatureRecipe, clock: _Clock) -> Corpus:
    clock.start("features")
    out = materialize_recipe(corpus, recipe)
    clock.stop()
    return out


def _view(base: Corpus, observation_names: Sequence[str],
          extra: Sequence[tuple[str, Sequence[str]]] = (),
          label: tuple[str, Sequence[str]] | None = None) -> Corpus:
    """Observation columns in order, then extras, then the label last."""
    out = base
    names = list(observation_names)
    for name, values in extra:
        out = append_column(out, name, list(values))
        names.append(name)
    if label is not None:
        name, values = label
        out = append_column(out, name, list(values))
        names.append(name)
    return select_columns(out, names)


def run_direct(
    spec: PipelineSpec,
    train_corpus: Corpus,
    test_corpus: Corpus,
    schema: TagSchema | None = None,
) -> PipelineResult:
    """One CRF from recipe columns to the target level."""
    if spec.strategy != "direct":
        raise PipelineConfigError("run_direct needs a direct pipeline")
    clock = _Clock()
    recipe_cols = spec.recipe.column_names
    train_feats = _materialized(train_corpus, spec.recipe, clock)
    gold = train_corpus.column(spec.label_column)
    if spec.target != "L2":
        if schema is None:
            raise PipelineConfigError(
                "projecting the gold column to %s needs a schema" % spec.target
            )
        gold = [project_tag(schema, t, spec.target) for t in gold]
    view = _view(train_feats, recipe_cols, label=("__cible__", gold))
    clock.start("train")
    model, t_hash = _train_stage(view, spec.config)
    clock.stop()
    test_feats = _materialized(test_corpus, spec.recipe, clock)
    clock.start("tag")
    predicted = _tag_view(model, _view(test_feats, recipe_cols))
    clock.stop()
    column = "Res" + spec.target
    return PipelineResult(
        corpus=append_column(test_corpus, column, predicted),
        prediction_column=column,
        timings=clock.timings,
        stages=(),
        models={spec.target: model},
        template_hashes={spec.target: t_hash},
        audit=("label column %r read only for training" % spec.label_column,),
    )


def run_cascade(
    spec: PipelineSpec,
    train_corpus: Corpus,
    test_corpus: Corpus,
    schema: TagSchema,
) -> PipelineResult:
    """Three CRFs, each consuming the previous levels' result columns."""
    if spec.strategy != "cascade":
        raise PipelineConfigError("run_cascade needs a cascade pipeline")
    if schema is None:
        raise PipelineConfigError("cascade learning needs a schema")
    clock = _Clock()
    base_cols = spec.recipe.column_names
    train_feats = _materialized(train_corpus, spec.recipe, clock)
    test_feats = _materialized(test_corpus, spec.recipe, clock)
    gold_l2 = train_corpus.column(spec.label_column)
    gold = {
        level: [project_tag(schema, t, level) for t in gold_l2]
        for level in ("L0", "L1", "L2")
    }
    models: dict[str, LinearChainModel] = {}
    hashes: dict[str, str] = {}
    stages: list[StagePrediction] = []
    train_extra: list[tuple[str, Sequence[str]]] = []
    test_extra: list[tuple[str, Sequence[str]]] = []
    result_columns: list[tuple[str, list[str]]] = []
    for level, result_name in (("L0", "ResL0"), ("L1", "ResL01"), ("L2", "ResL012")):
        view = _view(
            train_feats, base_cols, train_extra, ("__cible__", gold[level])
        )
        clock.start("train")
        model, t_hash = _train_stage(view, spec.config)
        clock.stop()
        models[level] = model
        hashes[level] = t_hash
        clock.start("tag")
        predicted = _tag_view(model, _view(test_feats, base_cols, test_extra))
        clock.stop()
        result_columns.append((result_name, predicted))
        if level != "L2":
            feature_view = _view(
                train_feats, base_cols, train_extra, (result_name, gold[level])
            )
            clock.start("train")
            stage = _stage_feature_values(
                feature_view, model, spec, spec.seed + len(stages)
            )
            clock.stop()
            stages.append(stage)
            train_extra.append((result_name, stage.values))
            test_extra.append((result_name, predicted))
    out = test_corpus
    for name, values in result_columns:
        out = append_column(out, name, values)
    return PipelineResult(
        corpus=out,
        prediction_column="ResL012",
        timings=clock.timings,
        stages=tuple(stages),
        models=models,
        template_hashes=hashes,
        audit=(
            "stage feature source: %s" % spec.stage_source,
            "label column %r read only for training" % spec.label_column,
        ),
    )


def _component_gold(
    schema: TagSchema, tags: Sequence[str]
) -> list[list[str]]:
    columns: list[list[str]] = [[], [], [], []]
    for t in tags:
        try:
            ct = decompose(schema, t)
        except UnknownTagError:
            raise UndecomposableTagError(
                "training tag %r has no decomposition in the schema" % t
            ) from None
        for k in range(4):
            columns[k].append(symbol_to_text(ct.component(k)))
    return columns


def run_decomposed(
    spec: PipelineSpec,
    train_corpus: Corpus,
    test_corpus: Corpus,
    schema: TagSchema,
) -> PipelineResult:
    """Four component CRFs plus CRF or rule-based recombination."""
    if spec.strategy != "decomposed":
        raise PipelineConfigError("run_decomposed needs a decomposed pipeline")
    if schema is None:
        raise PipelineConfigError("decomposed learning needs a schema")
    clock = _Clock()
    comp_cols = spec.recipe.column_names
    train_feats = _materialized(train_corpus, spec.recipe, clock)
    test_feats = _materialized(test_corpus, spec.recipe, clock)
    gold_l2 = train_corpus.column(spec.label_column)
    gold_components = _component_gold(schema, gold_l2)
    models: dict[str, LinearChainModel] = {}
    hashes: dict[str, str] = {}
    stages: list[StagePrediction] = []
    component_views: list[Corpus] = []
    predicted_components: list[list[str]] = []
    test_view = _view(test_feats, comp_cols)
    for k in range(4):
        name = "ResG%d" % k
        view = _view(train_feats, comp_cols, (), (name, gold_components[k]))
        component_views.append(view)
        clock.start("train")
        model, t_hash = _train_stage(view, spec.config)
        clock.stop()
        models["G%d" % k] = model
        hashes["G%d" % k] = t_hash
        clock.start("tag")
        predicted_components.append(_tag_view(model, test_view))
        clock.stop()
    out = test_corpus
    for k in range(4):
        out = append_column(out, "ResG%d" % k, predicted_components[k])
    if spec.recombination == "rules":
        clock.start("tag")
        final = _repair_tags(spec, schema, models, test_view)
        clock.stop()
        audit_note = "recombination: composition rules over marginal scores"
    else:
        rec_cols = spec.recombiner_recipe.column_names
        rec_train = _materialized(train_corpus, spec.recombiner_recipe, clock)
        rec_test = _materialized(test_corpus, spec.recombiner_recipe, clock)
        train_extra = []
        for k in range(4):
            clock.start("train")
            stage = _stage_feature_values(
                component_views[k], models["G%d" % k], spec, spec.seed + k
            )
            clock.stop()
            stages.append(stage)
            train_extra.append(("ResG%d" % k, stage.values))
        view = _view(
            rec_train, rec_cols, train_extra, ("__cible__", gold_l2)
        )
        clock.start("train")
        model, t_hash = _train_stage(view, spec.config)
        clock.stop()
        models["L2"] = model
        hashes["L2"] = t_hash
        clock.start("tag")
        final = _tag_view(
            model,
            _view(rec_test, rec_cols,
                  [("ResG%d" % k, predicted_components[k]) for k in range(4)]),
        )
        clock.stop()
        audit_note = "recombination: CRF over component results (%s source)" % (
            spec.stage_source
        )
    out = append_column(out, "ResL2", final)
    return PipelineResult(
        corpus=out,
        prediction_column="ResL2",
        timings=clock.timings,
        stages=tuple(stages),
        models=models,
        template_hashes=hashes,
        audit=(
            audit_note,
            "label column %r read only for training" % spec.label_column,
        ),
    )


def _repair_tags(
    spec: PipelineSpec,
    schema: TagSchema,
    models: Mapping[str, LinearChainModel],
    test_view: Corpus,
) -> list[str]:
    """Combine per-component node marginals into valid tags."""
    component_marginals = [
        marginals(models["G%d" % k], test_view) for k in range(4)
    ]
    labels = [models["G%d" % k].labels for k in range(4)]
    out: list[str] = []
    for s, sentence in enumerate(test_view.sentences):
        for t in range(len(sentence)):
            pools = []
            for k in range(4):
                row = np.maximum(component_marginals[k][s][t], 1e-300)
                scores = np.log(row)
                pools.append(
                    [(labels[k][i], float(scores[i])) for i in range(len(labels[k]))]
                )
            out.append(repair(schema, pools))
    return out


def run_pipeline(
    spec: PipelineSpec,
    train_corpus: Corpus,
    test_corpus: Corpus,
    schema: TagSchema | None = None,
) -> PipelineResult:
    if spec.strategy == "direct":
        return run_direct(spec, train_corpus, test_corpus, schema)
    if spec.strategy == "cascade":
        return run_cascade(spec, train_corpus, test_corpus, schema)
    return run_decomposed(spec, train_corpus, test_corpus, schema)


# --- pipeline spec files ----------------------------------------------


def format_pipeline_spec(spec: PipelineSpec) -> str:
    """Canonical key=value form, embedded verbatim in reports."""
    lines = [
        "[pipeline]",
        "id = %s" % spec.id,
        "strategy = %s" % spec.strategy,
        "recipe = %s" % spec.recipe.text,
        "target = %s" % spec.target,
    ]
    if spec.recombination is not None:
        lines.append("recombination = %s" % spec.recombination)
    if spec.recombiner_recipe is not None:
        lines.append("recombiner_recipe = %s" % spec.recombiner_recipe.text)
    lines += [
        "stage_source = %s" % spec.stage_source,
        "jackknife_folds = %d" % spec.jackknife_folds,
        "seed = %d" % spec.seed,
        "label_column = %s" % spec.label_column,
        "[training]",
        "sigma = %s" % repr(spec.config.sigma),
        "max_iterations = %d" % spec.config.max_iterations,
        "tolerance = %s" % repr(spec.config.tolerance),
        "cutoff = %d" % spec.config.cutoff,
    ]
    return "\n".join(lines) + "\n"


_PIPELINE_KEYS = {
    "id", "strategy", "recipe", "target", "recombination",
    "recombiner_recipe", "stage_source", "jackknife_folds", "seed",
    "label_column",
}
_TRAINING_KEYS = {"sigma", "max_iterations", "tolerance", "cutoff"}


def parse_pipeline_spec(text: str) -> PipelineSpec:
    """Parse a spec file; a bare id pulls the named configuration and the
    remaining keys override it."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise PipelineConfigError("bad pipeline file: %s" % err) from None
    unknown_sections = set(parser.sections()) - {"pipeline", "training"}
    if unknown_sections:
        raise PipelineConfigError(
            "unknown sections: %s" % ", ".join(sorted(unknown_sections))
        )
    if "pipeline" not in parser:
        raise PipelineConfigError("missing [pipeline] section")
    p = parser["pipeline"]
    unknown = set(p) - _PIPELINE_KEYS
    if unknown:
        raise PipelineConfigError("unknown keys: %s" % ", ".join(sorted(unknown)))
    training = parser["training"] if "training" in parser else {}
    unknown = set(training) - _TRAINING_KEYS
    if unknown:
        raise PipelineConfigError(
            "unknown training keys: %s" % ", ".join(sorted(unknown))
        )
    try:
        config = TrainingConfig(
            sigma=float(training.get("sigma", 1.0)),
            max_iterations=int(training.get("max_iterations", 300)),
            tolerance=float(training.get("tolerance", 1e-5)),
            cutoff=int(training.get("cutoff", 1)),
        )
        overrides: dict = {"config": config}
        if "stage_source" in p:
            overrides["stage_source"] = p["stage_source"]
        if "jackknife_folds" in p:
            overrides["jackknife_folds"] = int(p["jackknife_folds"])
        if "seed" in p:
            overrides["seed"] = int(p["seed"])
        if "label_column" in p:
            overrides["label_column"] = p["label_column"]
        pipeline_id = p.get("id", "custom")
        if pipeline_id in NAMED_PIPELINES:
            named = NAMED_PIPELINES[pipeline_id]
            fixed = {
                "strategy": named.strategy,
                "recipe": named.recipe.text,
                "target": named.target,
                "recombination": named.recombination,
                "recombiner_recipe": (
                    None if named.recombiner_recipe is None
                    else named.recombiner_recipe.text
                ),
            }
            for key, resolved in fixed.items():
                if key in p and p[key] != resolved:
                    raise PipelineConfigError(
                        "%r is fixed to %r by pipeline %s"
                        % (key, resolved, pipeline_id)
                    )
            return named_pipeline(pipeline_id, **overrides)
        if pipeline_id != "custom":
            raise PipelineConfigError("unknown pipeline id %r" % pipeline_id)
        if "strategy" not in p or "recipe" not in p:
            raise PipelineConfigError("custom pipelines need strategy and recipe")
        if "recombination" in p:
            overrides["recombination"] = p["recombination"]
        if "recombiner_recipe" in p:
            overrides["recombiner_recipe"] = parse_recipe(p["recombiner_recipe"])
        return PipelineSpec(
            id="custom",
            strategy=p["strategy"],
            recipe=parse_recipe(p["recipe"]),
            target=p.get("target", "L2"),
            **overrides,
        )
    except ValueError as err:
        raise PipelineConfigError("bad value in pipeline file: %s" % err) from None
