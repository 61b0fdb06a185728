"""Command-line surface: gen / train / eval / study / plot."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..autodiff import load_checkpoint, save_checkpoint
from ..expr import save_vocab, vocab_hash
from ..model import ModelConfig, desk_config, paper_config
from ..train_eval import (
    LossWeights,
    build_dataset,
    evaluate,
    run_illposed_comparison,
    run_input_class,
    run_input_size_ablation,
    run_ood,
    run_temporal_grid,
    run_time_marching,
    run_transfer_study,
    run_unseen_operator,
    run_weight_ablation,
    study_spec,
    train,
)
from ..train_eval.studies import ROLLOUT_FAMILIES
from .dataset import generate_shard, read_shard, write_shard
from .reports import plot_rows, read_csv, write_csv
from .runconfig import RunConfig

log = logging.getLogger("pdemol")

STUDY_IDS = ("temporal-grid", "time-marching", "ood", "input-class",
             "unseen-operator", "study2-exp1", "study2-exp2", "study2-exp3",
             "study2-exp4", "study2-exp5", "study2-mini", "study3-exp1",
             "study3-exp2", "study3-exp3", "ablation-input", "ablation-weights")


def _model_config(rc: RunConfig) -> ModelConfig:
    make = paper_config if rc.preset == "paper" else desk_config
    return make(mode=rc.mode)


def _load_config(args) -> RunConfig:
    rc = RunConfig.load(args.config) if args.config else RunConfig()
    for key in ("seed", "families", "n_train", "n_test", "preset", "mode",
                "noise", "t_end", "alpha", "beta", "steps", "batch_size"):
        v = getattr(args, key.replace("-", "_"), None)
        if v is not None:
            setattr(rc, key, tuple(v) if key == "families" else v)
    return rc


def cmd_gen(args) -> int:
    rc = _load_config(args)
    out = Path(args.out_dir)
    counts_tr = {f: rc.n_train for f in rc.families}
    counts_te = {f: rc.n_test for f in rc.families}
    ds_tr = generate_shard(out / "train", counts_tr, "train", rc.seed,
                           config_hash=rc.hash())
    ds_te = generate_shard(out / "test", counts_te, "test", rc.seed,
                           config_hash=rc.hash(), ic_class=args.test_ic_class)
    save_vocab(out / "vocab.txt")
    rc.save(out / "config.json")
    rows = [{"split": "train", "n": len(ds_tr), "resamples": ds_tr.meta["resamples"]},
            {"split": "test", "n": len(ds_te), "resamples": ds_te.meta["resamples"]}]
    path = write_csv(out, "generation-report", rows,
                     header={"config_hash": rc.hash(), "vocab": vocab_hash()})
    print(f"wrote shards under {out} (report: {path})")
    return 0


def cmd_train(args) -> int:
    rc = _load_config(args)
    out = Path(args.out_dir)
    ds = read_shard(args.shard)
    cfg = _model_config(rc)
    sym_mode = None if rc.mode == "1to1" else rc.expression_mode
    result = train(cfg, ds, rc.steps, batch_size=rc.batch_size, seed=rc.seed,
                   weights=LossWeights(rc.alpha, rc.beta), sym_mode=sym_mode,
                   noise=rc.noise, n_input=rc.n_input, lr_max=rc.lr)
    ckpt = out / "checkpoint"
    save_checkpoint(ckpt, result.params, step=result.steps,
                    rng_state={"seed": rc.seed},
                    meta={"config_hash": rc.hash(), "vocab_sha256": vocab_hash(),
                          "model_config": cfg.to_json(),
                          "run_config": rc.to_json()})
    curve = [{"step": s, "loss": l, "lr": lr} for s, l, lr in result.loss_curve]
    path = write_csv(out, "loss-curve", curve, header={"config_hash": rc.hash()})
    print(f"checkpoint at {ckpt} ({result.wall_seconds:.1f}s; curve: {path})")
    return 0


def _load_model(ckpt_path: str):
    params, manifest = load_checkpoint(ckpt_path)
    meta = manifest["meta"]
    if meta.get("vocab_sha256") != vocab_hash():
        raise SystemExit("checkpoint vocabulary hash does not match this build")
    cfg = ModelConfig.from_json(meta["model_config"])
    return params, cfg, meta


def cmd_eval(args) -> int:
    params, cfg, meta = _load_model(args.ckpt)
    ds = read_shard(args.shard)
    shard_hash = json.loads((Path(args.shard) / "manifest.json").read_text())["config_hash"]
    if shard_hash and meta.get("config_hash") and shard_hash != meta["config_hash"]:
        raise SystemExit(f"config-hash mismatch: shard {shard_hash} vs "
                         f"checkpoint {meta['config_hash']}")
    rc = RunConfig.from_dict(meta.get("run_config", {})) if meta.get("run_config") else RunConfig()
    noise = args.noise if args.noise is not None else rc.noise
    sym_mode = None if cfg.mode == "1to1" else rc.expression_mode
    rep = evaluate(params, cfg, ds, sym_mode=sym_mode, noise=noise,
                   noise_seed=rc.seed)
    rows = [rep.row()] + [{"family": f, **v} for f, v in rep.per_family.items()]
    path = write_csv(args.out_dir, "eval", rows,
                     header={"config_hash": meta.get("config_hash", ""),
                             "noise": noise})
    print(json.dumps(rep.row(), indent=1))
    print(f"report: {path}")
    return 0


def _study_model(args, rc: RunConfig, families) -> tuple[dict, ModelConfig]:
    if args.ckpt:
        params, cfg, _ = _load_model(args.ckpt)
        return params, cfg
    cfg = desk_config(mode="2to1")
    ds = build_dataset({f: rc.n_train for f in families}, "train", rc.seed)
    result = train(cfg, ds, rc.steps, batch_size=rc.batch_size, seed=rc.seed,
                   sym_mode="known", noise=rc.noise, lr_max=rc.lr)
    return result.params, cfg


def cmd_study(args) -> int:
    rc = _load_config(args)
    sid = args.study_id
    if sid not in STUDY_IDS:
        raise SystemExit(f"unknown study {sid!r}; choose from {STUDY_IDS}")
    out = Path(args.out_dir)

    if sid in ("temporal-grid", "time-marching", "ood", "input-class"):
        fams = [f for f in rc.families if f in ROLLOUT_FAMILIES] or list(ROLLOUT_FAMILIES)
        params, cfg = _study_model(args, rc, fams)
        if sid == "temporal-grid":
            te = build_dataset({f: rc.n_test for f in fams}, "test", rc.seed,
                               ic_class="sinusoid")
            rows = [run_temporal_grid(params, cfg, te)]
        elif sid == "time-marching":
            insts = [i for f in fams for i in
                     (build_dataset({f: max(4, rc.n_test // 4)}, "test", rc.seed,
                                    ic_class="sinusoid").instances)]
            r = run_time_marching(params, cfg, insts,
                                  t_ends=(2.25, 2.5, rc.t_end))
            rows = [{"t_end": k, "rel_l2_pct": v} for k, v in r["errors_pct"].items()]
            rows.insert(0, {"t_end": 2.0, "rel_l2_pct": r["window0_pct"]})
        elif sid == "ood":
            rows = [run_ood(params, cfg, fams, n_test=rc.n_test, base_seed=rc.seed + 101)]
        else:
            rows = [run_input_class(params, cfg, fams, n_test=rc.n_test,
                                    base_seed=rc.seed + 202)]
    elif sid == "unseen-operator":
        r = run_unseen_operator(n_train=rc.n_train, n_test=rc.n_test,
                                steps=rc.steps, base_seed=rc.seed + 303,
                                batch_size=rc.batch_size, lr_max=rc.lr)
        r.pop("result")
        rows = [r]
    elif sid.startswith(("study2", "study3")):
        spec = study_spec(sid)
        r = run_transfer_study(spec, base_seed=rc.seed + 505,
                               batch_size=rc.batch_size, lr_max=rc.lr)
        r.pop("result")
        rows = [r]
    elif sid == "ablation-input":
        tr, te = _ablation_data(rc)
        rows = run_input_size_ablation(tr, te, steps=rc.steps,
                                       batch_size=rc.batch_size, seed=rc.seed,
                                       lr_max=rc.lr)
    else:  # ablation-weights
        tr, te = _ablation_data(rc)
        rows = run_weight_ablation(tr, te, ratios=(0.2, 1.0, rc.alpha),
                                   steps=rc.steps, batch_size=rc.batch_size,
                                   seed=rc.seed, lr_max=rc.lr)
    path = write_csv(out, f"study-{sid}", rows,
                     header={"config_hash": rc.hash(), "study": sid})
    print(json.dumps(rows, indent=1, default=str))
    print(f"report: {path}")
    return 0


def _ablation_data(rc: RunConfig):
    fams = list(rc.families)[:2]
    tr = build_dataset({f: rc.n_train for f in fams}, "train", rc.seed)
    te = build_dataset({f: rc.n_test for f in fams}, "test", rc.seed,
                       ic_class="sinusoid")
    return tr, te


def cmd_plot(args) -> int:
    header, rows = read_csv(args.csv)
    if not rows:
        raise SystemExit(f"{args.csv}: no data rows")
    x = args.x or list(rows[0])[0]
    ys = args.y or [k for k in rows[0] if k != x]
    path = plot_rows(args.out_dir, Path(args.csv).stem, rows, x, ys,
                     title=header.get("study", ""))
    print(f"plot: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdemol",
                                 description="multi-operator PDE learning")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run-config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir", default="runs")
        p.add_argument("--preset", choices=("desk", "paper"))
        p.add_argument("--mode", choices=("2to2", "2to1", "1to1"))
        p.add_argument("--noise", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--steps", type=int)
        p.add_argument("--batch-size", type=int)

    g = sub.add_parser("gen", help="generate dataset shards")
    common(g)
    g.add_argument("--families", nargs="+")
    g.add_argument("--n-train", type=int)
    g.add_argument("--n-test", type=int)
    g.add_argument("--test-ic-class", default=None)
    g.set_defaults(fn=cmd_gen)

    t = sub.add_parser("train", help="train a model on a shard")
    common(t)
    t.add_argument("--shard", required=True)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a shard")
    common(e)
    e.add_argument("--shard", required=True)
    e.add_argument("--ckpt", required=True)
    e.set_defaults(fn=cmd_eval)

    s = sub.add_parser("study", help="run a named study protocol")
    common(s)
    s.add_argument("study_id", choices=STUDY_IDS)
    s.add_argument("--families", nargs="+")
    s.add_argument("--n-train", type=int)
    s.add_argument("--n-test", type=int)
    s.add_argument("--t-end", type=float)
    s.add_argument("--ckpt")
    s.set_defaults(fn=cmd_study)

    p = sub.add_parser("plot", help="render a report CSV to SVG")
    p.add_argument("--csv", required=True)
    p.add_argument("--out-dir", default="runs")
    p.add_argument("--x")
    p.add_argument("--y", nargs="+")
    p.set_defaults(fn=cmd_plot)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s %(message)s")
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
