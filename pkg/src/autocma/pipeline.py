"""End-to-end orchestration: generate, label, train, evaluate.

Stages persist their artifacts under one output directory and are idempotent:
a rerun with unchanged inputs and seeds either skips completed work (per-
function artifacts act as the resume ledger) or reproduces files byte for
byte. Every stochastic consumer derives its seed from the master seed plus a
structured path, so per-function work can run in parallel without affecting
results.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cmaes import Configuration, default_config, run
from .ela import (
    FEATURE_NAMES,
    Doe,
    ElaVector,
    compute_ela,
    fit_scaler,
    prune_correlated,
    sample_doe,
    scale_rows,
    write_feature_csv,
    write_manifest,
)
from .errors import DegenerateFunctionError, ParameterError
from .nets import (
    LabeledDataset,
    encode,
    grid_search,
    load_model,
    predict,
    save_model,
    train,
)
from .problems import MaBbobSpec, make_bbob, make_mabbob, sample_mabbob_spec
from .rgf import RgfGenParams, RgfFunction, deserialize_tree, generate_rgf, serialize_tree
from .seeding import derive_seed
from .selection import SelectionVerdict, screen, write_verdict_csv
from .stats import (
    auc_values,
    select_sbs,
    select_vbs,
    wilcoxon_one_sided,
    write_report_csv,
)
from .tpe import HpoResult, label_function

TRAINING_SOURCES = ("rgf", "mabbob", "mixed")
_MIN_TRAIN_FUNCTIONS = 25


@dataclass
class PipelineConfig:
    dimension: int
    n_train_functions: int
    training_source: str
    master_seed: int
    output_dir: Path
    samples_per_dim: int | None = None
    run_budget_per_dim: int | None = None
    tpe_budget: int | None = None
    repetitions: int = 10
    restrict_to_continuous_hp: bool = False
    test_suite: tuple = tuple(range(1, 25))
    jobs: int = 1
    tpe_n_startup: int = 20
    nn_grid: tuple | None = None
    rgf_max_depth: int = 8

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)

    def validate(self) -> "PipelineConfig":
        if self.dimension < 2:
            raise ParameterError("dimension must be >= 2")
        if self.training_source not in TRAINING_SOURCES:
            raise ParameterError(f"training_source must be one of {TRAINING_SOURCES}")
        for name in ("n_train_functions", "repetitions", "jobs", "tpe_n_startup"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if not all(1 <= fid <= 24 for fid in self.test_suite):
            raise ParameterError("test_suite entries must be BBOB ids 1..24")
        for name in ("samples_per_dim", "run_budget_per_dim", "tpe_budget"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ParameterError(f"{name} must be positive")
        return self

    # defaults follow the published experimental scales for low/high dimension
    @property
    def samples_per_dim_resolved(self) -> int:
        if self.samples_per_dim is not None:
            return self.samples_per_dim
        return 50 if self.dimension <= 10 else 20

    @property
    def run_budget(self) -> int:
        per_dim = self.run_budget_per_dim
        if per_dim is None:
            per_dim = 1000 if self.dimension <= 10 else 100
        return per_dim * self.dimension

    @property
    def tpe_budget_resolved(self) -> int:
        if self.tpe_budget is not None:
            return self.tpe_budget
        return 500 if self.dimension <= 10 else 300

    @classmethod
    def desk_scale(cls, output_dir, master_seed: int = 7, **overrides) -> "PipelineConfig":
        """Small-but-meaningful scale that completes on a desktop."""
        base = dict(
            dimension=5,
            n_train_functions=50,
            training_source="mixed",
            master_seed=master_seed,
            output_dir=output_dir,
            run_budget_per_dim=500,
            tpe_budget=50,
            repetitions=5,
            test_suite=(1, 5, 12),
        )
        base.update(overrides)
        return cls(**base).validate()

    def to_doc(self) -> dict:
        doc = {
            "dimension": self.dimension,
            "n_train_functions": self.n_train_functions,
            "training_source": self.training_source,
            "master_seed": self.master_seed,
            "output_dir": str(self.output_dir),
            "samples_per_dim": self.samples_per_dim,
            "run_budget_per_dim": self.run_budget_per_dim,
            "tpe_budget": self.tpe_budget,
            "repetitions": self.repetitions,
            "restrict_to_continuous_hp": self.restrict_to_continuous_hp,
            "test_suite": list(self.test_suite),
            "jobs": self.jobs,
            "tpe_n_startup": self.tpe_n_startup,
            "rgf_max_depth": self.rgf_max_depth,
        }
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "PipelineConfig":
        known = dict(doc)
        known.pop("nn_grid", None)
        known["test_suite"] = tuple(known.get("test_suite", tuple(range(1, 25))))
        valid = set(cls.__dataclass_fields__)
        unknown = sorted(set(known) - valid)
        if unknown:
            raise ParameterError(f"unknown config keys: {unknown}")
        missing = [k for k in ("dimension", "n_train_functions", "training_source",
                               "master_seed", "output_dir") if k not in known]
        if missing:
            raise ParameterError(f"config is missing required keys: {missing}")
        return cls(**known).validate()


# -- artifact paths -------------------------------------------------------------

def _pool_dir(cfg) -> Path:
    return cfg.output_dir / "pool"


def _label_dir(cfg) -> Path:
    return cfg.output_dir / "label"


def _model_dir(cfg) -> Path:
    return cfg.output_dir / "model"


def _eval_dir(cfg) -> Path:
    return cfg.output_dir / "eval"


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _write_json(path: Path, doc) -> None:
    _write_text(path, json.dumps(doc, sort_keys=True) + "\n")


# -- stage: generate -------------------------------------------------------------

def _pool_ids(cfg: PipelineConfig):
    """(id, kind) pairs; mixed pools put trees first, specs second."""
    n = cfg.n_train_functions
    if cfg.training_source == "rgf":
        kinds = ["rgf"] * n
    elif cfg.training_source == "mabbob":
        kinds = ["mabbob"] * n
    else:
        n_rgf = (n + 1) // 2
        kinds = ["rgf"] * n_rgf + ["mabbob"] * (n - n_rgf)
    return [(f"{kind}-{i:03d}", kind) for i, kind in enumerate(kinds)]


def stage_generate(cfg: PipelineConfig) -> dict:
    cfg.validate()
    pool = _pool_dir(cfg)
    manifest_path = pool / "manifest.json"
    if manifest_path.exists():
        return json.loads(manifest_path.read_text())

    entries = []
    tree_lines = [f"rgf-v1 d={cfg.dimension}"]
    for fid, kind in _pool_ids(cfg):
        seed = derive_seed(cfg.master_seed, "generate", fid)
        if kind == "rgf":
            params = RgfGenParams(max_depth=cfg.rgf_max_depth, seed=seed)
            func = generate_rgf(params, cfg.dimension)
            entries.append(
                {"id": fid, "kind": "rgf", "line": len(tree_lines)}
            )
            tree_lines.append(serialize_tree(func.tree))
        else:
            spec = sample_mabbob_spec(cfg.dimension, seed)
            _write_text(pool / "mabbob" / f"{fid}.json", spec.to_json() + "\n")
            entries.append({"id": fid, "kind": "mabbob", "path": f"mabbob/{fid}.json"})

    if len(tree_lines) > 1:
        _write_text(pool / "rgf.txt", "\n".join(tree_lines) + "\n")
    doc = {
        "dimension": cfg.dimension,
        "source": cfg.training_source,
        "n": cfg.n_train_functions,
        "entries": entries,
    }
    _write_json(manifest_path, doc)
    return doc


def load_pool(cfg: PipelineConfig):
    """Rebuild (id, ObjectiveFunction) pairs from the persisted pool."""
    pool = _pool_dir(cfg)
    doc = json.loads((pool / "manifest.json").read_text())
    tree_lines = None
    if (pool / "rgf.txt").exists():
        tree_lines = (pool / "rgf.txt").read_text().splitlines()
    out = []
    for entry in doc["entries"]:
        if entry["kind"] == "rgf":
            tree = deserialize_tree(tree_lines[entry["line"]], doc["dimension"])
            out.append((entry["id"], RgfFunction(tree, id=entry["id"])))
        else:
            spec = MaBbobSpec.from_json((pool / entry["path"]).read_text())
            out.append((entry["id"], make_mabbob(spec, doc["dimension"])))
    return out


# -- stage: label ----------------------------------------------------------------

def _verdict_to_doc(fid: str, v: SelectionVerdict) -> dict:
    return {
        "id": fid,
        "y_opt": v.y_opt,
        "tau": v.kendall_tau,
        "z": v.z_score,
        "ambiguous": v.ambiguous,
        "outlier": v.outlier,
        "accepted": v.accepted,
        "reasons": list(v.reasons),
    }


def _doc_to_verdict(doc: dict) -> SelectionVerdict:
    return SelectionVerdict(
        y_opt=doc["y_opt"],
        kendall_tau=doc["tau"],
        z_score=doc["z"],
        ambiguous=doc["ambiguous"],
        outlier=doc["outlier"],
        accepted=doc["accepted"],
        reasons=tuple(doc["reasons"]),
    )


def _label_one(payload: dict) -> dict:
    """Label a single function; returns persisted-document contents."""
    cfg_doc = payload["cfg"]
    fid = payload["id"]
    dimension = cfg_doc["dimension"]
    if payload["kind"] == "rgf":
        func = RgfFunction(deserialize_tree(payload["tree"], dimension), id=fid)
    else:
        func = make_mabbob(MaBbobSpec.from_json(payload["spec"]), dimension)

    master = cfg_doc["master_seed"]
    doe = sample_doe(func, cfg_doc["samples_per_dim"], derive_seed(master, "doe", fid))
    if doe.degenerate:
        verdict = SelectionVerdict(
            y_opt=0.0, kendall_tau=0.0, z_score=0.0, ambiguous=False,
            outlier=False, accepted=False,
            reasons=("degenerate: constant objective sample",),
        )
        return {"id": fid, "verdict": _verdict_to_doc(fid, verdict)}

    try:
        ela = compute_ela(doe)
    except DegenerateFunctionError as exc:
        verdict = SelectionVerdict(
            y_opt=0.0, kendall_tau=0.0, z_score=0.0, ambiguous=False,
            outlier=False, accepted=False, reasons=(str(exc),),
        )
        return {"id": fid, "verdict": _verdict_to_doc(fid, verdict)}

    try:
        hpo = label_function(
            func,
            budget_tpe=cfg_doc["tpe_budget"],
            budget_run=cfg_doc["run_budget"],
            repetitions=cfg_doc["repetitions"],
            seed=derive_seed(master, "label", fid),
            doe=doe,
            restrict_to_continuous=cfg_doc["restrict"],
            n_startup=cfg_doc["n_startup"],
        )
    except DegenerateFunctionError as exc:
        verdict = SelectionVerdict(
            y_opt=0.0, kendall_tau=0.0, z_score=0.0, ambiguous=False,
            outlier=False, accepted=False, reasons=(str(exc),),
        )
        return {"id": fid, "verdict": _verdict_to_doc(fid, verdict)}

    if func.known_optimum is None:
        verdict = screen(hpo)
    else:
        # optimum known by construction: the selection screen is for
        # generated functions whose optimum must be estimated
        verdict = SelectionVerdict(
            y_opt=float(func.known_optimum), kendall_tau=1.0, z_score=0.0,
            ambiguous=False, outlier=False, accepted=True,
            reasons=("known optimum: screen skipped",),
        )

    return {
        "id": fid,
        "verdict": _verdict_to_doc(fid, verdict),
        "hpo": hpo.to_json(),
        "features": {
            "id": fid,
            "values": [float(v) for v in ela.values],
            "y_raw_min": doe.y_raw_min,
            "y_raw_max": doe.y_raw_max,
        },
    }


def _label_payloads(cfg: PipelineConfig, pending_ids):
    pool = _pool_dir(cfg)
    doc = json.loads((pool / "manifest.json").read_text())
    tree_lines = None
    if (pool / "rgf.txt").exists():
        tree_lines = (pool / "rgf.txt").read_text().splitlines()
    cfg_doc = {
        "dimension": cfg.dimension,
        "master_seed": cfg.master_seed,
        "samples_per_dim": cfg.samples_per_dim_resolved,
        "tpe_budget": cfg.tpe_budget_resolved,
        "run_budget": cfg.run_budget,
        "repetitions": cfg.repetitions,
        "restrict": cfg.restrict_to_continuous_hp,
        "n_startup": cfg.tpe_n_startup,
    }
    payloads = []
    for entry in doc["entries"]:
        if entry["id"] not in pending_ids:
            continue
        payload = {"cfg": cfg_doc, "id": entry["id"], "kind": entry["kind"]}
        if entry["kind"] == "rgf":
            payload["tree"] = tree_lines[entry["line"]]
        else:
            payload["spec"] = (pool / entry["path"]).read_text()
        payloads.append(payload)
    return payloads


def _run_parallel(worker, payloads, jobs: int):
    """Yield results in submission order, lazily, so callers can persist
    each one as soon as it is available."""
    if jobs <= 1 or len(payloads) <= 1:
        for p in payloads:
            yield worker(p)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(worker, payloads)


def stage_label(cfg: PipelineConfig) -> dict:
    cfg.validate()
    label = _label_dir(cfg)
    label.mkdir(parents=True, exist_ok=True)
    manifest = json.loads((_pool_dir(cfg) / "manifest.json").read_text())
    all_ids = [e["id"] for e in manifest["entries"]]

    pending = [
        fid for fid in all_ids if not (label / f"{fid}.verdict.json").exists()
    ]
    results = _run_parallel(_label_one, _label_payloads(cfg, set(pending)), cfg.jobs)
    for res in results:
        fid = res["id"]
        _write_json(label / f"{fid}.verdict.json", res["verdict"])
        if "hpo" in res:
            _write_text(label / f"{fid}.hpo.json", res["hpo"] + "\n")
            _write_json(label / f"{fid}.features.json", res["features"])

    # rebuild the ledger and the accepted-feature matrix from disk state
    entries = []
    accepted_ids = []
    rows = []
    for fid in all_ids:
        doc = json.loads((label / f"{fid}.verdict.json").read_text())
        entries.append((fid, _doc_to_verdict(doc)))
        if doc["accepted"]:
            feat = json.loads((label / f"{fid}.features.json").read_text())
            accepted_ids.append(fid)
            rows.append(feat["values"])
    write_verdict_csv(label / "ledger.csv", entries)
    if rows:
        write_feature_csv(label / "features.csv", accepted_ids, np.asarray(rows), FEATURE_NAMES)
    return {"labeled": len(all_ids), "accepted": len(accepted_ids)}


# -- stage: train ----------------------------------------------------------------

def _load_accepted(cfg: PipelineConfig):
    label = _label_dir(cfg)
    manifest = json.loads((_pool_dir(cfg) / "manifest.json").read_text())
    ids, rows, configs = [], [], []
    for entry in manifest["entries"]:
        fid = entry["id"]
        vdoc = json.loads((label / f"{fid}.verdict.json").read_text())
        if not vdoc["accepted"]:
            continue
        feat = json.loads((label / f"{fid}.features.json").read_text())
        hpo = HpoResult.from_json((label / f"{fid}.hpo.json").read_text())
        ids.append(fid)
        rows.append(feat["values"])
        configs.append(hpo.best_config)
    return ids, np.asarray(rows, dtype=float), configs


def stage_train(cfg: PipelineConfig) -> dict:
    cfg.validate()
    model_dir = _model_dir(cfg)
    model_path = model_dir / "model.json"
    if model_path.exists():
        return {"skipped": True}

    ids, matrix, configs = _load_accepted(cfg)
    if len(ids) < _MIN_TRAIN_FUNCTIONS:
        raise ParameterError(
            f"need >= {_MIN_TRAIN_FUNCTIONS} accepted labeled functions, got {len(ids)}"
        )

    kept = prune_correlated(matrix, FEATURE_NAMES)
    scaler = fit_scaler(matrix, FEATURE_NAMES, kept)
    X = scale_rows(scaler, matrix, FEATURE_NAMES)

    cont = np.stack([encode(c).continuous for c in configs])
    if cfg.restrict_to_continuous_hp:
        cat = None
    else:
        cat = np.stack(
            [[int(np.argmax(block)) for block in encode(c).onehot] for c in configs]
        )
    dataset = LabeledDataset(
        X=X, cont_targets=cont, cat_targets=cat, feature_names=FEATURE_NAMES
    )

    arch, table = grid_search(
        dataset,
        derive_seed(cfg.master_seed, "train", "grid"),
        grid=cfg.nn_grid,
        return_table=True,
    )
    model = train(
        dataset, arch, derive_seed(cfg.master_seed, "train", "final"), scaler=scaler
    )

    model_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(model_dir / "feature_manifest.json", FEATURE_NAMES)
    with open(model_dir / "gridsearch.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_hidden", "hidden_size", "epochs", "mean_val_loss"])
        for cell in sorted(table, key=lambda a: (a.n_hidden, a.hidden_size, a.epochs)):
            writer.writerow(
                [cell.n_hidden, cell.hidden_size, cell.epochs, repr(table[cell])]
            )
    save_model(model, model_path)
    return {
        "n_train": len(ids),
        "kept_features": len(kept),
        "architecture": (arch.n_hidden, arch.hidden_size, arch.epochs),
    }


# -- stage: evaluate -------------------------------------------------------------

_TEST_FUNCTION_SEED = 0  # canonical single instance per test id


def _test_one(payload: dict) -> dict:
    cfg_doc = payload["cfg"]
    fid = payload["fid"]
    func = make_bbob(fid, cfg_doc["dimension"], _TEST_FUNCTION_SEED)
    master = cfg_doc["master_seed"]
    doe = sample_doe(func, cfg_doc["samples_per_dim"], derive_seed(master, "test-doe", fid))
    ela = compute_ela(doe)
    hpo = label_function(
        func,
        budget_tpe=cfg_doc["tpe_budget"],
        budget_run=cfg_doc["run_budget"],
        repetitions=cfg_doc["repetitions"],
        seed=derive_seed(master, "test-label", fid),
        doe=doe,
        restrict_to_continuous=cfg_doc["restrict"],
        n_startup=cfg_doc["n_startup"],
    )
    return {
        "fid": fid,
        "hpo": hpo.to_json(),
        "features": {
            "id": f"f{fid:02d}",
            "values": [float(v) for v in ela.values],
            "y_raw_min": doe.y_raw_min,
            "y_raw_max": doe.y_raw_max,
        },
    }


def stage_evaluate(cfg: PipelineConfig) -> dict:
    cfg.validate()
    model = load_model(_model_dir(cfg) / "model.json")
    eval_dir = _eval_dir(cfg)
    eval_dir.mkdir(parents=True, exist_ok=True)

    fids = sorted(set(cfg.test_suite))
    cfg_doc = {
        "dimension": cfg.dimension,
        "master_seed": cfg.master_seed,
        "samples_per_dim": cfg.samples_per_dim_resolved,
        "tpe_budget": cfg.tpe_budget_resolved,
        "run_budget": cfg.run_budget,
        "repetitions": cfg.repetitions,
        "restrict": cfg.restrict_to_continuous_hp,
        "n_startup": cfg.tpe_n_startup,
    }
    pending = [
        {"cfg": cfg_doc, "fid": fid}
        for fid in fids
        if not (eval_dir / f"f{fid:02d}.hpo.json").exists()
    ]
    for res in _run_parallel(_test_one, pending, cfg.jobs):
        fid = res["fid"]
        _write_text(eval_dir / f"f{fid:02d}.hpo.json", res["hpo"] + "\n")
        _write_json(eval_dir / f"f{fid:02d}.features.json", res["features"])

    histories = {
        fid: HpoResult.from_json((eval_dir / f"f{fid:02d}.hpo.json").read_text()).history
        for fid in fids
    }
    sbs = select_sbs(histories)
    default_cfg = default_config(cfg.dimension)

    auc_rows = []
    report_rows = []
    config_doc = {"sbs": json.loads(sbs.to_json())}
    for fid in fids:
        feat = json.loads((eval_dir / f"f{fid:02d}.features.json").read_text())
        ela = ElaVector(names=FEATURE_NAMES, values=np.asarray(feat["values"]))
        predicted = predict(model, ela)
        vbs = select_vbs(histories[fid])
        func = make_bbob(fid, cfg.dimension, _TEST_FUNCTION_SEED)
        y_opt, y_worst = float(func.known_optimum), feat["y_raw_max"]

        scores = {}
        for kind, kcfg in (
            ("predicted", predicted),
            ("default", default_cfg),
            ("sbs", sbs),
            ("vbs", vbs),
        ):
            vals = []
            for rep in range(cfg.repetitions):
                tr = run(
                    func, kcfg, cfg.run_budget,
                    derive_seed(cfg.master_seed, "eval", fid, kind, rep),
                )
                vals.append(auc_values(tr.best_so_far, y_opt, y_worst))
                auc_rows.append((f"f{fid:02d}", kind, rep, repr(vals[-1])))
            scores[kind] = vals

        config_doc[f"f{fid:02d}"] = {
            "predicted": json.loads(predicted.to_json()),
            "vbs": json.loads(vbs.to_json()),
        }
        for baseline in ("default", "sbs"):
            # the signed-rank test needs at least 5 paired repetitions
            if cfg.repetitions >= 5:
                p = wilcoxon_one_sided(scores["predicted"], scores[baseline])
            else:
                p = float("nan")
            report_rows.append(
                (
                    f"f{fid:02d}",
                    baseline,
                    repr(float(np.median(scores["predicted"]))),
                    repr(float(np.median(scores[baseline]))),
                    repr(p),
                    int(p < 0.05),
                )
            )

    with open(eval_dir / "auc.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["function_id", "config_kind", "repetition", "auc"])
        writer.writerows(auc_rows)
    _write_json(eval_dir / "configs.json", config_doc)
    write_report_csv(eval_dir / "report.csv", report_rows)
    return {"functions": len(fids), "report": str(eval_dir / "report.csv")}


def run_all(cfg: PipelineConfig) -> dict:
    stage_generate(cfg)
    labeled = stage_label(cfg)
    trained = stage_train(cfg)
    evaluated = stage_evaluate(cfg)
    return {"label": labeled, "train": trained, "evaluate": evaluated}


# -- predict on a user-provided sample --------------------------------------------

def predict_from_doe_csv(cfg: PipelineConfig, doe_csv) -> Configuration:
    """Compute features from a raw (x..., y) sample file and predict."""
    rows = []
    with open(doe_csv, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "y" or not all(h.startswith("x") for h in header[:-1]):
            raise ParameterError("DoE CSV must have columns x0..x{d-1},y")
        for rec in reader:
            rows.append([float(v) for v in rec])
    data = np.asarray(rows, dtype=float)
    X, y_raw = data[:, :-1], data[:, -1]
    y_min, y_max = float(y_raw.min()), float(y_raw.max())
    if y_max == y_min:
        raise DegenerateFunctionError("constant objective sample")
    doe = Doe(
        X=X, y=(y_raw - y_min) / (y_max - y_min), y_raw_min=y_min, y_raw_max=y_max
    )
    ela = compute_ela(doe)
    model = load_model(_model_dir(cfg) / "model.json")
    return predict(model, ela)
