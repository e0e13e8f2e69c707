"""Self-describing text model files.

Layout::

    SEAMSENTINEL-MODEL v1
    kind=svm|forest
    scheme=...
    scenario=...|none
    seed=...
    features=name,name,...
    classes=0,1,...
    standardizer.mean=...|none
    standardizer.std=...|none
    info.<key>=<value>          (sorted, zero or more)
    payload
    <model specific lines>

Floats are written with ``repr`` so a load/save cycle is lossless and the
file bytes depend only on the model.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from seamsentinel.classify.dataset import Standardizer
from seamsentinel.classify.forest import ForestModel, Tree
from seamsentinel.classify.svm import BinarySvm, SvmModel
from seamsentinel.features import Scheme
from seamsentinel.signal import Scenario

MAGIC = "SEAMSENTINEL-MODEL"
VERSION = "v1"


class ModelFormatError(ValueError):
    pass


def _floats(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _parse_floats(text: str) -> np.ndarray:
    if text == "":
        return np.zeros(0)
    return np.array([float(v) for v in text.split(",")])


def dumps_model(model) -> str:
    lines = [f"{MAGIC} {VERSION}", f"kind={model.kind}", f"scheme={model.scheme.value}",
             f"scenario={model.scenario.value if model.scenario else 'none'}",
             f"seed={model.seed}", "features=" + ",".join(model.names),
             "classes=" + ",".join(str(c) for c in model.classes)]
    st = getattr(model, "standardizer", None)
    if st is not None:
        lines.append("standardizer.mean=" + _floats(st.mean))
        lines.append("standardizer.std=" + _floats(st.std))
    else:
        lines.append("standardizer.mean=none")
        lines.append("standardizer.std=none")
    for key in sorted(model.info):
        lines.append(f"info.{key}={model.info[key]}")
    lines.append("payload")
    if isinstance(model, SvmModel):
        lines.append(f"C={float(model.C)!r}")
        lines.append(f"gamma={float(model.gamma)!r}")
        lines.append(f"machines={len(model.machines)}")
        for m in model.machines:
            lines.append(f"machine={m.positive},{m.negative} bias={float(m.bias)!r} "
                         f"n_sv={len(m.alpha)}")
            for a, lab, sv in zip(m.alpha, m.sv_labels, m.support_vectors):
                lines.append(f"{float(a)!r} {int(lab)} {_floats(sv)}")
    elif isinstance(model, ForestModel):
        lines.append("importances=" + _floats(model.feature_importances))
        lines.append(f"trees={model.n_trees}")
        for t, tree in enumerate(model.trees):
            lines.append(f"tree={t} nodes={tree.n_nodes}")
            for k in range(tree.n_nodes):
                lines.append(f"{tree.feature[k]} {float(tree.threshold[k])!r} {tree.left[k]} "
                             f"{tree.right[k]} {_floats(tree.value[k])}")
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return "\n".join(lines) + "\n"


def save_model(model, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise ModelFormatError("unexpected end of model file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def keyed(self, key: str) -> str:
        line = self.next()
        prefix = key + "="
        if not line.startswith(prefix):
            raise ModelFormatError(f"line {self.pos}: expected '{prefix}...', got {line!r}")
        return line[len(prefix):]


def loads_model(text: str):
    r = _Lines(text)
    first = r.next().split()
    if len(first) != 2 or first[0] != MAGIC:
        raise ModelFormatError("not a model file (bad magic line)")
    if first[1] != VERSION:
        raise ModelFormatError(f"unsupported model format version {first[1]!r}")
    try:
        kind = r.keyed("kind")
        scheme = Scheme.parse(r.keyed("scheme"))
        sc = r.keyed("scenario")
        scenario = None if sc == "none" else Scenario.parse(sc)
        seed = int(r.keyed("seed"))
        names = tuple(r.keyed("features").split(","))
        classes = tuple(int(c) for c in r.keyed("classes").split(","))
        mean_txt, std_txt = r.keyed("standardizer.mean"), r.keyed("standardizer.std")
        standardizer = None
        if mean_txt != "none":
            standardizer = Standardizer(names, _parse_floats(mean_txt), _parse_floats(std_txt))
        info = {}
        line = r.next()
        while line.startswith("info."):
            key, _, value = line[5:].partition("=")
            info[key] = value
            line = r.next()
        if line != "payload":
            raise ModelFormatError(f"line {r.pos}: expected 'payload'")
        if kind == "svm":
            C = float(r.keyed("C"))
            gamma = float(r.keyed("gamma"))
            machines = []
            for _ in range(int(r.keyed("machines"))):
                head = dict(part.split("=", 1) for part in r.next().split())
                pos, neg = (int(v) for v in head["machine"].split(","))
                n_sv = int(head["n_sv"])
                alpha, labels, svs = [], [], []
                for _ in range(n_sv):
                    a, lab, sv = r.next().split(" ")
                    alpha.append(float(a))
                    labels.append(float(lab))
                    svs.append(_parse_floats(sv))
                sv_arr = np.array(svs).reshape(n_sv, len(names))
                machines.append(BinarySvm(pos, neg, sv_arr, np.array(alpha), np.array(labels),
                                          float(head["bias"])))
            return SvmModel(names, scheme, scenario, standardizer, classes, C, gamma,
                            tuple(machines), seed, info)
        if kind == "forest":
            importances = _parse_floats(r.keyed("importances"))
            trees = []
            for _ in range(int(r.keyed("trees"))):
                head = dict(part.split("=", 1) for part in r.next().split())
                n_nodes = int(head["nodes"])
                cols = [r.next().split(" ") for _ in range(n_nodes)]
                trees.append(Tree(
                    np.array([int(c[0]) for c in cols], dtype=np.int64),
                    np.array([float(c[1]) for c in cols]),
                    np.array([int(c[2]) for c in cols], dtype=np.int64),
                    np.array([int(c[3]) for c in cols], dtype=np.int64),
                    np.array([_parse_floats(c[4]) for c in cols]).reshape(n_nodes, len(classes)),
                ))
            return ForestModel(names, scheme, scenario, classes, tuple(trees), importances,
                               seed, info)
    except ModelFormatError:
        raise
    except (ValueError, KeyError, IndexError) as exc:
        raise ModelFormatError(f"line {r.pos}: {exc}") from None
    raise ModelFormatError(f"unknown model kind {kind!r}")


def load_model(path: str | Path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_model(fh.read())
