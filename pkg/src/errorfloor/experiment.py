"""Manifests, the on-disk result store and task dispatch.

A manifest is a JSON object ``{"task", "code", "master_seed", "out", "params"}``.
Its hash (sha256 of the canonical JSON without ``out`` and ``workers``) is
embedded in every file the run writes, and per-attempt / per-cell outputs are
reused on a rerun with the same hash, so interrupted runs resume exactly.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field, replace
from itertools import groupby
from pathlib import Path
from typing import Any

import numpy as np

from . import mc
from .channel import ChannelOutput, SNRPoint, sample_output
from .code_graph import CodeSpec, load_code
from .codewords import low_weight_codewords
from .decoder import decision_values, decode
from .errors import ErrorFloorError, InvalidManifest, TaskFailure
from .instanton import (InstantonRecord, SearchConfig, Spectrum, biased_search, codeword_seed,
                        coefficient_mask, collect_spectrum, continuation, search, verify_record, with_verification)
from .report import write_report

log = logging.getLogger(__name__)

_SEARCH = {"iters": 4, "mode": "hard", "restarts": 8, "max_evals": 10_000, "simplex_scale": 0.1,
           "anneal_factor": 0.5, "start_scale": None, "tol_bisect": 1e-6}

TASKS: dict[str, dict[str, Any]] = {
    "code-info": {},
    "decode": {"iters": 4, "snr_db": None, "frame": 0, "input_file": None},
    "mc-sweep": {"iters": list(mc.DEFAULT_ITERATIONS), "snr_db": None, "max_frames": 1_000_000,
                 "target_errors": 100, "ci_level": 0.95, "guard_l_sq": None, "force": False},
    "instanton-search": {**_SEARCH, "attempts": 100, "mask_file": None, "seed_point_file": None,
                         "verify": False, "depth": None, "bin_width": 0.25},
    "biased-search": {**_SEARCH, "attempts": 1, "mask_file": None, "mask": None,
                      "mask_record": None, "codeword": None, "codeword_weight": None,
                      "codeword_trials": 50, "seed_point_file": None, "followup": True,
                      "masked_attempts": 1, "followup_restarts": None, "followup_max_evals": None,
                      "verify": False, "depth": None},
    "spectrum": {"source": None, "bin_width": 0.25},
    "ct-verify": {"record": None, "depth": None, "offset": 1e-4},
    "report": {"sources": None, "instantons": [], "d_min": None, "figures": True},
}
REQUIRED = {"mc-sweep": ("snr_db",), "spectrum": ("source",), "ct-verify": ("record",),
            "report": ("sources",)}
UNHASHED = ("workers",)


def default_workers() -> int:
    raw = os.environ.get("ERRORFLOOR_WORKERS")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise InvalidManifest(f"ERRORFLOOR_WORKERS must be an integer, got {raw!r}") from exc
    return max(1, n)


@dataclass(frozen=True)
class ExperimentManifest:
    task: str
    code: str = "tanner155"
    master_seed: int = 0
    out: str = "results"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in TASKS:
            raise InvalidManifest(f"unknown task {self.task!r}; expected one of {sorted(TASKS)}")
        allowed = set(TASKS[self.task]) | set(UNHASHED)
        unknown = set(self.params) - allowed
        if unknown:
            raise InvalidManifest(f"unknown parameters for {self.task}: {sorted(unknown)}")
        for key in REQUIRED.get(self.task, ()):
            if self.params.get(key) is None:
                raise InvalidManifest(f"task {self.task} requires parameter {key!r}")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise InvalidManifest("master_seed must be a non-negative integer")

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentManifest":
        if not isinstance(data, dict) or "task" not in data:
            raise InvalidManifest("manifest must be a JSON object with a 'task' field")
        extra = set(data) - {"task", "code", "master_seed", "out", "params", "manifest_sha256"}
        if extra:
            raise InvalidManifest(f"unknown manifest fields: {sorted(extra)}")
        return cls(task=data["task"], code=data.get("code", "tanner155"),
                   master_seed=data.get("master_seed", 0), out=data.get("out", "results"),
                   params=dict(data.get("params") or {}))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentManifest":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidManifest(f"cannot read manifest {path}: {exc}") from exc
        return cls.from_json(data)

    def resolved(self) -> dict:
        """Task parameters with defaults filled in."""
        merged = dict(TASKS[self.task])
        merged.update(self.params)
        return merged

    def to_json(self) -> dict:
        return {"task": self.task, "code": self.code, "master_seed": self.master_seed,
                "out": self.out, "params": self.resolved()}

    def digest(self) -> str:
        data = self.to_json()
        del data["out"]
        for key in UNHASHED:
            data["params"].pop(key, None)
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def override(self, **changes) -> "ExperimentManifest":
        """Apply non-``None`` top-level fields and parameters (flags beat the manifest)."""
        top = {k: v for k, v in changes.items() if k in ("code", "master_seed", "out") and v is not None}
        params = dict(self.params)
        params.update({k: v for k, v in changes.items()
                       if k not in ("code", "master_seed", "out") and v is not None})
        return replace(self, params=params, **top)


class ResultStore:
    """Directory of JSON records and text tables with atomic replacement."""

    def __init__(self, root: str | Path, manifest_hash: str | None = None):
        self.root = Path(root)
        self.manifest_hash = manifest_hash

    def path(self, rel: str) -> Path:
        return self.root / rel

    def write_text(self, rel: str, text: str) -> Path:
        target = self.path(rel)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tmp-", suffix=target.suffix)
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return target

    def write_json(self, rel: str, data: dict) -> Path:
        if self.manifest_hash is not None:
            data = {**data, "manifest_sha256": self.manifest_hash}
        return self.write_text(rel, json.dumps(data, sort_keys=True, indent=1) + "\n")

    def write_table(self, rel: str, text: str) -> Path:
        if self.manifest_hash is not None:
            text = f"# manifest_sha256: {self.manifest_hash}\n" + text
        return self.write_text(rel, text)

    def read_json(self, rel: str) -> dict | None:
        p = self.path(rel)
        if not p.exists():
            return None
        return json.loads(p.read_text())

    def current(self, rel: str) -> dict | None:
        """A JSON record written under the same manifest hash, else ``None``."""
        data = self.read_json(rel)
        if data is None or data.get("manifest_sha256") != self.manifest_hash:
            return None
        return data

    # readers used by report / spectrum --------------------------------------

    def fer_points(self) -> list[mc.FERPoint]:
        p = self.path("fer.csv")
        return mc.read_csv(p.read_text()) if p.exists() else []

    def records(self) -> list[InstantonRecord]:
        out = []
        for p in sorted(self.path("instantons").glob("attempt_*.json")):
            data = json.loads(p.read_text())
            if not data.get("no_failure"):
                out.append(InstantonRecord.from_json(data))
        return out

    def attempts(self) -> int:
        return len(list(self.path("instantons").glob("attempt_*.json")))

    def manifest(self) -> dict | None:
        return self.read_json("manifest.json")


def file_hash(path: str | Path) -> str | None:
    """Manifest hash embedded in a JSON record or a commented text table."""
    text = Path(path).read_text()
    if text.startswith("# manifest_sha256:"):
        return text.split("\n", 1)[0].split(":", 1)[1].strip()
    try:
        return json.loads(text).get("manifest_sha256")
    except (json.JSONDecodeError, AttributeError):
        return None


# --------------------------------------------------------------------------
# Parameter helpers
# --------------------------------------------------------------------------

def read_int_list(path: str | Path) -> tuple[int, ...]:
    """Bit indices separated by whitespace or commas."""
    text = Path(path).read_text().replace(",", " ")
    try:
        return tuple(int(t) for t in text.split())
    except ValueError as exc:
        raise InvalidManifest(f"{path}: expected integer bit indices") from exc


def read_point(path: str | Path) -> np.ndarray:
    """A channel output: a JSON record with an ``x`` field or whitespace-separated floats."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return np.asarray(json.loads(text)["x"], dtype=np.float64)
    try:
        return np.array([float(t) for t in text.replace(",", " ").split()])
    except ValueError as exc:
        raise InvalidManifest(f"{path}: expected numeric channel values") from exc


def _single_iters(value) -> int:
    if isinstance(value, (list, tuple)):
        if len(value) != 1:
            raise InvalidManifest("this task takes exactly one iteration count")
        value = value[0]
    return int(value)


def _list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def search_config(p: dict, seed: int, mask=None, seed_point=None) -> SearchConfig:
    return SearchConfig(mode=p["mode"], n_iterations=_single_iters(p["iters"]),
                        restarts=int(p["restarts"]), max_evals=int(p["max_evals"]),
                        simplex_scale=float(p["simplex_scale"]),
                        anneal_factor=float(p["anneal_factor"]), tol_bisect=float(p["tol_bisect"]),
                        start_scale=p["start_scale"], mask=mask,
                        seed_point=None if seed_point is None else tuple(seed_point),
                        rng_seed=seed)


# --------------------------------------------------------------------------
# Tasks
# --------------------------------------------------------------------------

def _code_info(m, code: CodeSpec, store: ResultStore, p, workers) -> dict:
    g = code.graph
    info = {"name": code.name, "construction": code.construction, "n": code.n, "m": code.m,
            "k": code.k, "regularity": list(g.regularity()) if g.regularity() else None,
            "n_edges": g.n_edges, "d_min": code.d_min, "note": code.note, "alist_sha256": g.digest()}
    store.write_json("code_info.json", info)
    reg = info["regularity"]
    print(f"{code.name}: n={code.n} m={code.m} k={code.k} "
          f"regularity={'(%d,%d)' % tuple(reg) if reg else 'irregular'}")
    return info


def _decode(m, code, store, p, workers) -> dict:
    g = code.graph
    n_it = _single_iters(p["iters"])
    if p["input_file"]:
        x = ChannelOutput(read_point(p["input_file"]))
        source = {"input_file": str(p["input_file"])}
    else:
        if p["snr_db"] is None:
            raise InvalidManifest("decode needs either input_file or snr_db")
        snr = SNRPoint.from_db(float(_list(p["snr_db"])[0]))
        x = sample_output(g.n_bits, snr, (m.master_seed, int(p["frame"])))
        source = {"snr_db": snr.snr_db, "frame": int(p["frame"])}
    out = decode(g, x, n_it)
    values = decision_values(g, x, n_it)
    result = {**source, "n_iterations": n_it, "failed": out.failed,
              "erroneous_bits": list(out.erroneous_bits), "syndrome_ok": out.syndrome_ok,
              "min_decision_value": float(values.min())}
    store.write_json("decode.json", result)
    print(f"failed={out.failed} erroneous_bits={len(out.erroneous_bits)} syndrome_ok={out.syndrome_ok}")
    return result


def _mc_sweep(m, code, store, p, workers) -> dict:
    g = code.graph
    cfg = mc.MCConfig(snr_points=tuple(SNRPoint.from_db(float(v)) for v in _list(p["snr_db"])),
                      iteration_counts=tuple(sorted(int(i) for i in _list(p["iters"]))),
                      max_frames=int(p["max_frames"]), target_errors=int(p["target_errors"]),
                      master_seed=m.master_seed, ci_level=float(p["ci_level"]),
                      guard_l_sq=p["guard_l_sq"], force=bool(p["force"]))
    done = {}
    if file_hash_or_none(store.path("fer.csv")) == store.manifest_hash:
        for pt in store.fer_points():
            done[(pt.snr.s_squared, pt.n_iterations)] = pt
    finished = list(done.values())

    def checkpoint(point):
        finished.append(point)
        store.write_text("fer.csv", mc.write_csv(finished, store.manifest_hash))
        log.info("%s: s^2=%.4f it=%d fer=%.3e (%d/%d)", code.name, point.snr.s_squared,
                 point.n_iterations, point.fer, point.errors, point.frames)

    points = mc.sweep(g, cfg, workers, done=done, on_point=checkpoint)
    store.write_text("fer.csv", mc.write_csv(points, store.manifest_hash))
    for pt in points:
        print(f"snr_db={pt.snr.snr_db:.3f} it={pt.n_iterations} frames={pt.frames} "
              f"errors={pt.errors} fer={pt.fer:.4e}")
    return {"cells": len(points)}


def file_hash_or_none(path: Path) -> str | None:
    return file_hash(path) if path.exists() else None


def _record_json(rec: InstantonRecord | None, attempt: int) -> dict:
    if rec is None:
        return {"attempt_id": attempt, "no_failure": True}
    return rec.to_json()


def _verify_into(g, rec: InstantonRecord, depth, store: ResultStore, rel: str) -> InstantonRecord:
    v = verify_record(g, rec, depth)
    store.write_json(rel, v.to_json())
    return with_verification(rec, v)


def _spectrum_outputs(store: ResultStore, spectrum: Spectrum, label: str) -> None:
    store.write_json("spectrum.json", {"label": label, "attempts": spectrum.attempts,
                                       "found": len(spectrum.records),
                                       "min_l_sq": float(spectrum.lengths.min()) if spectrum.records else None,
                                       "bin_width": spectrum.bin_width,
                                       "l_sq": [float(v) for v in spectrum.lengths]})
    store.write_table("l2_hist.dat", spectrum.histogram_text())


def _instanton_search(m, code, store, p, workers) -> dict:
    g = code.graph
    mask = read_int_list(p["mask_file"]) if p["mask_file"] else None
    seed_point = read_point(p["seed_point_file"]) if p["seed_point_file"] else None
    cfg = search_config(p, m.master_seed, mask, seed_point)
    n_attempts = int(p["attempts"])
    results: dict[int, InstantonRecord | None] = {}
    for i in range(n_attempts):
        data = store.current(f"instantons/attempt_{i:06d}.json")
        if data is not None:
            results[i] = None if data.get("no_failure") else InstantonRecord.from_json(data)
    todo = [i for i in range(n_attempts) if i not in results]

    def checkpoint(i, rec):
        results[i] = rec
        store.write_json(f"instantons/attempt_{i:06d}.json", _record_json(rec, i))
        if rec is not None:
            log.info("attempt %d: l2=%.4f evals=%d", i, rec.l_sq, rec.n_evals)

    # contiguous runs of missing attempts keep the pool busy and the order fixed
    for _, run in groupby(enumerate(todo), key=lambda t: t[1] - t[0]):
        ids = [i for _, i in run]
        collect_spectrum(g, cfg, len(ids), workers, first_attempt=ids[0], on_record=checkpoint)

    records = [results[i] for i in range(n_attempts) if results[i] is not None]
    spectrum = Spectrum(records, n_attempts, float(p["bin_width"]))
    summary = {"attempts": n_attempts, "found": len(records)}
    if records:
        best = spectrum.best()
        if p["verify"]:
            best = _verify_into(g, best, p["depth"], store, "best_verification.json")
        store.write_json("best_instanton.json", best.to_json())
        summary["min_l_sq"] = best.l_sq
        print(f"best l2={best.l_sq:.6f} (attempt {best.attempt_id}) over {n_attempts} attempts; "
              f"{len(records)} found a failure")
    _spectrum_outputs(store, spectrum, f"{code.name}_it{cfg.n_iterations}")
    return summary


def _biased_search(m, code, store, p, workers) -> dict:
    g = code.graph
    codeword = p["codeword"]
    if codeword is None and p["codeword_weight"] is not None:
        w = int(p["codeword_weight"])
        words = [c for c in low_weight_codewords(g, w, int(p["codeword_trials"]), seed=m.master_seed)
                 if len(c) == w]
        if not words:
            raise TaskFailure(f"no codeword of weight {w} found in {p['codeword_trials']} trials")
        codeword = list(words[0])
        store.write_json("codeword.json", {"support": codeword, "weight": w})
    if p["mask_file"]:
        mask = read_int_list(p["mask_file"])
    elif p["mask"] is not None:
        mask = tuple(int(b) for b in p["mask"])
    elif p["mask_record"]:
        rec = InstantonRecord.from_json(json.loads(Path(p["mask_record"]).read_text()))
        mask = coefficient_mask(g, rec, p["depth"])
    elif codeword is not None:
        mask = tuple(int(b) for b in codeword)
    else:
        raise InvalidManifest("biased-search needs mask_file, mask, mask_record, codeword or codeword_weight")
    seed_point = None
    if codeword is not None:
        seed_point = codeword_seed(g, codeword).x
    elif p["seed_point_file"]:
        seed_point = read_point(p["seed_point_file"])
    ladder = [int(i) for i in _list(p["iters"])]
    base = search_config({**p, "iters": ladder[0]}, m.master_seed, seed_point=seed_point)
    best = None
    for i in range(int(p["attempts"])):
        rel = f"instantons/attempt_{i:06d}.json"
        data = store.current(rel)
        if data is not None:
            rec = InstantonRecord.from_json(data)
        else:
            if len(ladder) > 1:
                steps = continuation(g, replace(base, mask=mask), ladder, i)
                rec = replace(steps[-1], phases={"ladder": [[r.n_iterations, r.l_sq] for r in steps],
                                                 "mask": list(steps[-1].mask)})
            elif p["followup"]:
                full = replace(base, restarts=int(p["followup_restarts"] or base.restarts),
                               max_evals=int(p["followup_max_evals"] or base.max_evals))
                rec = biased_search(g, base, mask, full, attempt_id=i,
                                    masked_attempts=int(p["masked_attempts"]))
            else:
                rec = search(g, replace(base, mask=mask), i)
            store.write_json(rel, rec.to_json())
        log.info("attempt %d: l2=%.4f", i, rec.l_sq)
        if best is None or rec.l_sq < best.l_sq:
            best = rec
    if p["verify"]:
        best = _verify_into(g, best, p["depth"], store, "best_verification.json")
    store.write_json("best_instanton.json", best.to_json())
    print(f"best l2={best.l_sq:.6f} with mask of {len(mask)} bits at {best.n_iterations} iterations")
    return {"min_l_sq": best.l_sq}


def _spectrum(m, code, store, p, workers) -> dict:
    source = ResultStore(p["source"])
    records = source.records()
    if not records:
        raise TaskFailure(f"no instanton records under {p['source']}")
    spectrum = Spectrum(records, source.attempts(), float(p["bin_width"]))
    _spectrum_outputs(store, spectrum, Path(p["source"]).name)
    print(f"{len(records)} records, min l2={spectrum.lengths.min():.6f}")
    return {"found": len(records)}


def _ct_verify(m, code, store, p, workers) -> dict:
    g = code.graph
    rec = InstantonRecord.from_json(json.loads(Path(p["record"]).read_text()))
    depth = rec.n_iterations if p["depth"] is None else int(p["depth"])
    v = verify_record(g, rec, depth, float(p["offset"]))
    report = v.to_json()
    store.write_json("verification.json", report)
    best = v.best()
    if best is not None:
        print(f"record l2={rec.l_sq:.6f} ct l2={best.ct_l_sq:.6f} sum n={best.total} "
              f"sum n^2={best.total_sq} match={v.matched}")
    if v.tie:
        print("degenerate tie at the probe point for at least one erroneous bit")
    return report


def _report(m, code, store, p, workers) -> dict:
    points, spectra = [], {}
    for src in _list(p["sources"]):
        s = ResultStore(src)
        points += s.fer_points()
        recs = s.records()
        if recs:
            spectra[Path(src).name] = Spectrum(recs, s.attempts())
    instantons = [float(v) for v in _list(p["instantons"] or [])]
    d_min = code.d_min if p["d_min"] is None else int(p["d_min"])
    paths = write_report(store.path("report"), points, spectra, instantons, d_min,
                         figures=bool(p["figures"]), provenance=store.manifest_hash)
    print(f"wrote {len(paths)} files to {store.path('report')}")
    return {"files": [str(q.relative_to(store.root)) for q in paths]}


DISPATCH = {"code-info": _code_info, "decode": _decode, "mc-sweep": _mc_sweep,
            "instanton-search": _instanton_search, "biased-search": _biased_search,
            "spectrum": _spectrum, "ct-verify": _ct_verify, "report": _report}


def run(manifest: ExperimentManifest, workers: int | None = None) -> int:
    """Execute ``manifest`` and write its outputs under ``manifest.out``."""
    p = manifest.resolved()
    if workers is None:
        workers = int(p.get("workers") or default_workers())
    digest = manifest.digest()
    store = ResultStore(manifest.out, digest)
    store.write_json("manifest.json", manifest.to_json())
    try:
        code = load_code(manifest.code)
    except (ErrorFloorError, ValueError, OSError) as exc:
        raise TaskFailure(f"cannot load code {manifest.code!r}: {exc}") from exc
    try:
        DISPATCH[manifest.task](manifest, code, store, p, workers)
    except ErrorFloorError:
        raise
    except (ValueError, OSError) as exc:
        raise TaskFailure(f"{manifest.task} failed: {type(exc).__name__}: {exc}") from exc
    return 0
