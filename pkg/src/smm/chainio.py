"""File formats: NDJSON chain storage, identified-model JSON, CSV data and
label files.

Chain files hold one JSON record per stored sweep with fields
``{iter, eta[K], clusters[K]{w[L], mu[L][r], sigma[L][r][r], b0[r],
lambda[r]}, S[N], K0}``; matrices are nested row-major lists and every real
is written with 17 significant digits, so a reread reproduces the draws
bit-exactly and rewriting is byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json

import numpy as np

from .sampler import ChainOutput


def _f(x: float) -> str:
    return "%.17g" % x


def _vec(a) -> str:
    return "[" + ",".join(_f(x) for x in a) + "]"


def _nest(a) -> str:
    if a.ndim == 1:
        return _vec(a)
    return "[" + ",".join(_nest(row) for row in a) + "]"


def chain_record(chain: ChainOutput, m: int) -> str:
    clusters = ",".join(
        "{\"w\":%s,\"mu\":%s,\"sigma\":%s,\"b0\":%s,\"lambda\":%s}" % (
            _vec(chain.w[m, k]), _nest(chain.mu[m, k]),
            _nest(chain.sigma[m, k]), _vec(chain.b0[m, k]),
            _vec(chain.lam[m, k]))
        for k in range(chain.K))
    s = ",".join(str(int(v)) for v in chain.S[m])
    return ("{\"iter\":%d,\"eta\":%s,\"clusters\":[%s],\"S\":[%s],\"K0\":%d}"
            % (chain.sweep_index[m], _vec(chain.eta[m]), clusters, s,
               chain.k0_trace[m]))


def write_chain(path, chain: ChainOutput) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in range(chain.n_stored):
            fh.write(chain_record(chain, m))
            fh.write("\n")


def read_chain(path) -> ChainOutput:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    if not records:
        raise ValueError(f"chain file {path} is empty")
    M = len(records)
    K = len(records[0]["eta"])
    L = len(records[0]["clusters"][0]["w"])
    r = len(records[0]["clusters"][0]["b0"])
    N = len(records[0]["S"])
    out = ChainOutput(
        eta=np.empty((M, K)), w=np.empty((M, K, L)),
        mu=np.empty((M, K, L, r)), sigma=np.empty((M, K, L, r, r)),
        b0=np.empty((M, K, r)), lam=np.empty((M, K, r)),
        S=np.empty((M, N), dtype=np.int32),
        k0_trace=np.empty(M, dtype=np.int32),
        sweep_index=np.empty(M, dtype=np.int64), config=None)
    for m, rec in enumerate(records):
        out.eta[m] = rec["eta"]
        out.S[m] = rec["S"]
        out.k0_trace[m] = rec["K0"]
        out.sweep_index[m] = rec["iter"]
        for k, cl in enumerate(rec["clusters"]):
            out.w[m, k] = cl["w"]
            out.mu[m, k] = cl["mu"]
            out.sigma[m, k] = cl["sigma"]
            out.b0[m, k] = cl["b0"]
            out.lam[m, k] = cl["lambda"]
    return out


def identified_to_dict(model) -> dict:
    """JSON payload of an IdentifiedModel (cluster summaries are posterior
    means of the weight and the weighted cluster mean)."""
    return {
        "K0_hat": int(model.K0_hat),
        "M0": int(model.M0),
        "M0_rho": float(model.M0_rho),
        "entropy": float(model.entropy),
        "warnings": list(model.warnings),
        "S_hat": [int(v) for v in model.S_hat],
        "t": [[float(v) for v in row] for row in model.t],
        "cluster_summaries": [
            {"eta_mean": float(model.eta_mean[k]),
             "mu_mean": [float(v) for v in model.mu_mean[k]]}
            for k in range(model.K0_hat)],
    }


def write_identified(path, model) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(identified_to_dict(model), fh, indent=1)
        fh.write("\n")


def write_labels_csv(path, model) -> None:
    """Per-observation assignments: id, S_hat and the winning probability."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "S_hat", "prob"])
        best = model.t.max(axis=1)
        for i, (s, p) in enumerate(zip(model.S_hat, best)):
            writer.writerow([i + 1, int(s), _f(p)])


def write_similarity_csv(path, sim: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in sim:
            fh.write(",".join(_f(v) for v in row))
            fh.write("\n")


# ---------------------------------------------------------------------------
# data CSV: r feature columns plus optional `component`/`cluster` labels
# ---------------------------------------------------------------------------

def write_data_csv(path, y: np.ndarray, cluster=None, component=None) -> None:
    y = np.asarray(y, dtype=float)
    header = ["x%d" % (j + 1) for j in range(y.shape[1])]
    cols = [y[:, j] for j in range(y.shape[1])]
    if component is not None:
        header.append("component")
        cols.append(np.asarray(component, dtype=np.int64))
    if cluster is not None:
        header.append("cluster")
        cols.append(np.asarray(cluster, dtype=np.int64))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(y.shape[0]):
            cells = [_f(c[i]) if c.dtype.kind == "f" else str(int(c[i]))
                     for c in cols]
            fh.write(",".join(cells) + "\n")


def read_data_csv(path):
    """Read a data CSV: columns named component/cluster become the label
    vectors, every other column is a feature.  Returns
    (y, cluster or None, component or None)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    names = [h.strip().lower() for h in header]
    special = {"component", "cluster"}
    feat_idx = [j for j, h in enumerate(names) if h not in special]
    if not feat_idx or not rows:
        raise ValueError(f"no feature columns or no rows in {path}")
    y = np.array([[float(row[j]) for j in feat_idx] for row in rows])
    out = {}
    for name in special:
        if name in names:
            j = names.index(name)
            out[name] = np.array([int(float(row[j])) for row in rows],
                                 dtype=np.int64)
    return y, out.get("cluster"), out.get("component")


def read_labels_csv(path, prefer=("cluster", "s_hat", "component", "label")):
    """Read a label vector from a CSV, trying the preferred column names in
    order and otherwise taking the first non-id column."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"no rows in {path}")
    col = None
    for name in prefer:
        if name in header:
            col = header.index(name)
            break
    if col is None:
        candidates = [j for j, h in enumerate(header) if h != "id"]
        if not candidates:
            raise ValueError(f"no label column found in {path}")
        col = candidates[0]
    return np.array([int(float(row[col])) for row in rows], dtype=np.int64)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
