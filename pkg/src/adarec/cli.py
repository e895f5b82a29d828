"""Command-line entry points: ingest, train, train-fixed, eval, report, synth.

Data directories follow the ingest layout: meta.json plus train/validation/
test interaction files (dense ids) and optional kg triples with id-map
sidecars. Training writes history.csv, checkpoint.bin, and assignment.csv
into its output directory. All config fields are addressable as flags, which
override values read from a config file.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluation, graph as graphmod, synthetic, training
from .graph import (CoreFilterError, DataSplit, Graph, LineFormatError,
                    load_interactions, load_kg, read_interaction_file, split,
                    write_id_map, write_interaction_file)
from .training import TrainConfig


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    for f in dataclasses.fields(TrainConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            parser.add_argument(flag, default=None,
                                action=argparse.BooleanOptionalAction)
        elif f.type in ("int", "int | None"):
            parser.add_argument(flag, type=int, default=None)
        elif f.type == "float":
            parser.add_argument(flag, type=float, default=None)
        else:
            parser.add_argument(flag, type=str, default=None)


def _config_from_args(args) -> TrainConfig:
    cfg = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    overrides = {}
    for f in dataclasses.fields(TrainConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = val
    return cfg.replaced(**overrides) if overrides else cfg


def _load_data_dir(data_dir, khop_threshold: int, max_hops: int) -> tuple[Graph, DataSplit]:
    data = Path(data_dir)
    meta = json.loads((data / "meta.json").read_text(encoding="utf-8"))
    n_users, n_items = meta["n_users"], meta["n_items"]
    train = read_interaction_file(data / "train.txt", n_users, n_items)
    val = read_interaction_file(data / "validation.txt", n_users, n_items)
    test = read_interaction_file(data / "test.txt", n_users, n_items)
    kg = None
    kg_path = data / "kg.txt"
    if kg_path.exists() and meta.get("n_entities", 0) >= 0 and kg_path.stat().st_size > 0:
        kg = load_kg(kg_path, n_items, declared_entities=meta.get("n_entities"))
    g = Graph(train, kg, max_hops=max_hops, khop_threshold=khop_threshold)
    return g, DataSplit(train, val, test)


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.preset == "planted":
        data = synthetic.planted_depth_dataset(seed=args.seed)
        write_interaction_file(data.interactions, out / "interactions.txt")
        synthetic.write_labels(data, out / "labels.csv")
    else:
        iset = synthetic.connected_bipartite(args.users, args.items, args.edges,
                                             seed=args.seed)
        write_interaction_file(iset, out / "interactions.txt")
    print(f"wrote {out / 'interactions.txt'}")
    return 0


def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    interactions = load_interactions(args.interactions, args.core)
    parts = split(interactions, args.train_frac, args.val_frac, args.seed)
    write_interaction_file(parts.train, out / "train.txt")
    write_interaction_file(parts.validation, out / "validation.txt")
    write_interaction_file(parts.test, out / "test.txt")
    write_id_map(interactions.user_original, out / "users.idmap")
    write_id_map(interactions.item_original, out / "items.idmap")
    meta = {
        "n_users": interactions.n_users,
        "n_items": interactions.n_items,
        "n_entities": 0,
        "n_relations": 0,
        "core": args.core,
        "seed": args.seed,
        "train_frac": args.train_frac,
        "val_frac": args.val_frac,
    }
    if args.kg:
        kg = load_kg(args.kg, interactions.n_items)
        meta["n_entities"] = kg.n_entities
        meta["n_relations"] = kg.n_relations
        with open(out / "kg.txt", "w", encoding="utf-8") as fh:
            for h, r, t in kg.triples:
                hg = h.index if h.kind == graphmod.Kind.ITEM else interactions.n_items + h.index
                tg = t.index if t.kind == graphmod.Kind.ITEM else interactions.n_items + t.index
                fh.write(f"{hg} {r} {tg}\n")
        write_id_map(kg.entity_original, out / "entities.idmap")
        write_id_map(kg.relation_original, out / "relations.idmap")
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n",
                                   encoding="utf-8")
    print(f"ingest: {interactions.n_users} users, {interactions.n_items} items, "
          f"{interactions.n_pairs} interactions "
          f"(train {parts.train.n_pairs} / val {parts.validation.n_pairs} / "
          f"test {parts.test.n_pairs})")
    return 0


def cmd_train(args, depth: int | None = None) -> int:
    cfg = _config_from_args(args)
    g, parts = _load_data_dir(args.data, cfg.khop_threshold, cfg.n_actions)
    if depth is None:
        result = training.train(g, parts, cfg, out_dir=args.out)
    else:
        result = training.train_fixed_depth(g, parts, cfg, depth)
        training.write_artifacts(result, g, args.out)
    print(f"trained {len(result.history)} epochs; best epoch {result.best_epoch} "
          f"(validation nDCG@{cfg.eval_k} {result.best_val_ndcg:.6f})")
    return 0


def cmd_eval(args) -> int:
    cfg_meta, _ = _read_checkpoint_meta(Path(args.run) / "checkpoint.bin")
    cfg = TrainConfig(**cfg_meta["config"])
    g, parts = _load_data_dir(args.data, cfg.khop_threshold, cfg.n_actions)
    blob = (Path(args.run) / "checkpoint.bin").read_bytes()
    model = training.restore_checkpoint(blob, g)
    result = evaluation.evaluate(model.assignment, model.table, model.pooling,
                                 parts, k=args.k, relevance=args.split)
    print(f"{args.split} nDCG@{args.k} {result.mean_ndcg:.6f}  "
          f"Recall@{args.k} {result.mean_recall:.6f}  "
          f"({len(result.user_ids)} users, {result.n_excluded} excluded)")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["user,ndcg,recall"]
        for u, nd, rc in zip(result.user_ids, result.ndcg, result.recall):
            lines.append(f"{int(u)},{repr(float(nd))},{repr(float(rc))}")
        (out / f"metrics_{args.split}.csv").write_text("\n".join(lines) + "\n",
                                                       encoding="utf-8")
    return 0


def _read_checkpoint_meta(path: Path):
    from . import arrayio
    return arrayio.load(path)


def cmd_report(args) -> int:
    if args.what == "actions":
        lines = (Path(args.run) / "assignment.csv").read_text(encoding="utf-8").splitlines()
        user_actions = []
        item_actions = []
        for line in lines[1:]:
            side, _, action = line.split(",")
            (user_actions if side == "user" else item_actions).append(int(action))
        assignment = evaluation.ActionAssignment(np.array(user_actions),
                                                 np.array(item_actions))
        pct = evaluation.action_distribution_report(assignment)
        print("side," + ",".join(f"depth{a}" for a in range(1, len(pct["user"]) + 1)))
        for side in ("user", "item"):
            print(side + "," + ",".join(f"{p:.2f}" for p in pct[side]))
        return 0
    if args.what == "reward":
        rows = evaluation.reward_curve_export(Path(args.run) / "history.csv",
                                              window=args.window)
        text = evaluation.reward_curve_csv(rows)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    # sparsity: re-evaluate the checkpoint, then group by train degree
    cfg_meta, _ = _read_checkpoint_meta(Path(args.run) / "checkpoint.bin")
    cfg = TrainConfig(**cfg_meta["config"])
    g, parts = _load_data_dir(args.data, cfg.khop_threshold, cfg.n_actions)
    model = training.restore_checkpoint(
        (Path(args.run) / "checkpoint.bin").read_bytes(), g)
    result = evaluation.evaluate(model.assignment, model.table, model.pooling,
                                 parts, k=cfg.eval_k, relevance="test")
    report = evaluation.sparsity_report(result, parts)
    print("group,max_count_exclusive,n_users,interaction_mass,mean_ndcg")
    for i, grp in enumerate(report.groups):
        print(f"{i},{grp.max_count_exclusive},{grp.n_users},"
              f"{grp.interaction_mass},{grp.mean_ndcg:.6f}")
    if report.merged:
        print("note: fewer distinct interaction counts than groups; groups merged")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adarec",
        description="Adaptive per-node aggregation depth for graph recommenders.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--preset", choices=["planted", "bipartite"], default="planted")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--users", type=int, default=500)
    p.add_argument("--items", type=int, default=500)
    p.add_argument("--edges", type=int, default=10_000)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="filter, split, and index an interaction file")
    p.add_argument("--interactions", required=True)
    p.add_argument("--kg", default=None)
    p.add_argument("--core", type=int, default=10)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--val-frac", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="adaptive-depth training")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-fixed", help="fixed-depth baseline training")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--depth", type=int, required=True)
    _add_config_flags(p)
    p.set_defaults(func=lambda a: cmd_train(a, depth=a.depth))

    p = sub.add_parser("eval", help="evaluate a trained run")
    p.add_argument("--run", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=["test", "validation"], default="test")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="action, sparsity, or reward reports")
    p.add_argument("what", choices=["actions", "sparsity", "reward"])
    p.add_argument("--run", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LineFormatError, CoreFilterError, ValueError, FileNotFoundError,
            RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
