"""Experiment orchestration, result CSVs and slot traces."""

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import analysis
from .errors import ChecksumError, ConfigError, ReplayMismatch, SchemaError
from .channel import CASE_BY_CODE, ChannelStream
from .field import DEFAULT_Q
from .multicast import DEFAULT_SEGMENT
from .pipeline import run_rateless, run_tdma, run_theorem1, trial_rngs
from .queues import TAG_BY_CODE, QueueTag, packet_label

SCHEMA = "collidenet-trace/1"
SCHEMES = ("theorem1", "tdma", "rateless")
MODES = ("paper", "adaptive")
CSV_COLUMNS = ["scheme", "p", "m", "seed", "trial", "mode", "phase1_slots",
               "phase2_slots", "total_slots", "r1", "r2", "decode_ok_rx1",
               "decode_ok_rx2", "halt_kind"]
SWEEP_COLUMNS = ["kind", "name", "p", "r1", "r2", "r1_stderr", "r2_stderr", "constraint_id"]
REGION_COLUMNS = ["region", "p", "vertex_x", "vertex_y", "constraint_id"]


def is_prime(n):
    """Deterministic Miller-Rabin for n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for s in small:
        if n % s == 0:
            return n == s
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass
class SimConfig:
    p: float = 0.5
    m: int = 1000
    seed: int = 0
    trials: int = 1
    mode: str = "adaptive"
    scheme: str = "theorem1"
    field_modulus: int = DEFAULT_Q
    segment: int = DEFAULT_SEGMENT
    workers: int = 1
    out: str = None
    trace: str = None

    def validate(self):
        if not (0.0 <= float(self.p) <= 1.0):
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scheme == "theorem1" and Fraction(str(self.p)) != Fraction(1, 2):
            raise ConfigError("the theorem1 scheme is implemented for p = 1/2 only")
        if int(self.m) < 0 or int(self.trials) < 1 or int(self.workers) < 1:
            raise ConfigError("m must be >= 0, trials and workers >= 1")
        if int(self.segment) < 1:
            raise ConfigError("segment must be >= 1")
        q = int(self.field_modulus)
        if not (2 <= q < 2**31) or not is_prime(q):
            raise ConfigError(f"field modulus must be a prime below 2**31, got {q}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.p == 0 and self.m > 0:
            raise ConfigError("p = 0 delivers nothing")
        return self

    def sim_fields(self):
        """The fields that determine results (not output paths or workers)."""
        return {k: getattr(self, k) for k in
                ("p", "m", "seed", "trials", "mode", "scheme", "field_modulus", "segment")}

    @classmethod
    def from_file(cls, path, **overrides):
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


@dataclass
class TrialResult:
    scheme: str
    p: float
    m: int
    seed: int
    trial: int
    mode: str
    phase1_slots: int
    phase2_slots: int
    total_slots: int
    r1: float = None
    r2: float = None
    decode_ok_rx1: bool = False
    decode_ok_rx2: bool = False
    halt_kind: str = None

    @property
    def ok(self):
        return self.halt_kind is None and self.decode_ok_rx1 and self.decode_ok_rx2

    def csv_row(self):
        def f(x):
            if x is None:
                return ""
            if isinstance(x, bool):
                return "true" if x else "false"
            if isinstance(x, float):
                return repr(x)
            return str(x)
        return [f(getattr(self, c)) for c in CSV_COLUMNS]


def _rate(m, total, ok):
    if not ok:
        return None
    return m / total if total else 0.0


# -- one trial ----------------------------------------------------------------

def run_trial(cfg, trial, tracer=None):
    """Run trial ``trial`` of ``cfg``; ``tracer`` collects trace lines."""
    chan, coef = trial_rngs(cfg.seed, trial)
    base = dict(scheme=cfg.scheme, p=float(cfg.p), m=int(cfg.m), seed=int(cfg.seed),
                trial=int(trial), mode=cfg.mode)
    q = int(cfg.field_modulus)
    if cfg.scheme == "theorem1":
        stream = ChannelStream(cfg.p, chan, q, keep_history=tracer is not None)
        run = run_theorem1(cfg.p, cfg.m, chan, coef, mode=cfg.mode, q=q,
                           segment=cfg.segment, stream=stream)
        ok = run.decode_ok
        res = TrialResult(**base, phase1_slots=run.phase1_slots,
                          phase2_slots=run.phase2_slots, total_slots=run.total_slots,
                          decode_ok_rx1=ok[1], decode_ok_rx2=ok[2],
                          halt_kind=run.halt_kind)
        if tracer is not None:
            tracer.theorem1(run, stream)
    elif cfg.scheme == "tdma":
        total = run_tdma(cfg.p, cfg.m, chan)
        res = TrialResult(**base, phase1_slots=total, phase2_slots=0, total_slots=total,
                          decode_ok_rx1=True, decode_ok_rx2=True)
    else:
        ses = run_rateless(cfg.p, cfg.m, chan, coef, q=q, segment=cfg.segment)
        res = TrialResult(**base, phase1_slots=ses.duration, phase2_slots=0,
                          total_slots=ses.duration, decode_ok_rx1=ses.decode_ok[1],
                          decode_ok_rx2=ses.decode_ok[2])
    live = res.halt_kind is None
    res.r1 = _rate(cfg.m, res.total_slots, live and res.decode_ok_rx1)
    res.r2 = _rate(cfg.m, res.total_slots, live and res.decode_ok_rx2)
    if tracer is not None:
        tracer.result(res)
    return res


def _trial_job(args):
    cfg, trial = args
    if not cfg.trace:
        return run_trial(cfg, trial), None
    tracer = TraceWriter(cfg, trial)
    res = run_trial(cfg, trial, tracer)
    return res, tracer.text()


@dataclass
class ExperimentResult:
    config: SimConfig
    trials: list
    summary: dict = field(default_factory=dict)


def aggregate(results):
    """Means and standard errors over trials that decoded; halts counted apart."""
    # fixed summation order, so statistics do not depend on completion order
    results = sorted(results, key=lambda r: (r.seed, r.trial))
    n = len(results)
    halted = [r for r in results if r.halt_kind]
    live = [r for r in results if not r.halt_kind]
    good = [r for r in live if r.decode_ok_rx1 and r.decode_ok_rx2]
    out = {"trials": n, "halted": len(halted), "decoded": len(good),
           "failure_rate": (len(live) - len(good)) / len(live) if live else 0.0,
           "halt_rate": len(halted) / n if n else 0.0}
    for key in ("r1", "r2"):
        xs = np.array([getattr(r, key) for r in good], float)
        out[key] = float(xs.mean()) if xs.size else None
        out[key + "_stderr"] = float(xs.std(ddof=1) / math.sqrt(xs.size)) if xs.size > 1 else 0.0
    if good:
        s = np.array([r.r1 + r.r2 for r in good])
        out["sum"] = float(s.mean())
        out["sum_stderr"] = float(s.std(ddof=1) / math.sqrt(s.size)) if s.size > 1 else 0.0
    return out


def run_experiment(cfg, workers=None):
    """All trials of ``cfg``, ordered by trial index, plus summary statistics."""
    cfg.validate()
    workers = int(workers or cfg.workers)
    jobs = [(cfg, t) for t in range(cfg.trials)]
    if workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.trials)) as ex:
            done = list(ex.map(_trial_job, jobs))
    else:
        done = [_trial_job(j) for j in jobs]
    results = [r for r, _ in done]
    if cfg.trace:
        for r, text in done:
            trace_path(cfg.trace, r.trial, cfg.trials).write_text(text)
    results.sort(key=lambda r: r.trial)
    exp = ExperimentResult(cfg, results, aggregate(results))
    if cfg.out:
        write_csv(cfg.out, results)
    return exp


def results_csv(results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerow(r.csv_row())
    return buf.getvalue()


def write_csv(path, results):
    Path(path).write_text(results_csv(results))


# -- traces ---------------------------------------------------------------------

def trace_path(path, trial, trials):
    if trials == 1:
        return Path(path)
    p = Path(path)
    return p.with_name(f"{p.stem}-{trial}{p.suffix}")


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class TraceWriter:
    """Collects one trial's trace lines: header, slots, events, result, checksum."""

    def __init__(self, cfg, trial):
        self.lines = [_dumps({"schema": SCHEMA, "config": cfg.sim_fields(), "trial": int(trial)})]

    def _slot(self, t, phase, alpha, case, tx1, tx2, moves):
        self.lines.append(_dumps({"t": t, "phase": phase, "alpha": [int(x) for x in alpha],
                                  "case": int(case), "tx1": tx1, "tx2": tx2,
                                  "transitions": moves}))

    def theorem1(self, run, stream):
        ph1 = run.phase1
        for t in range(ph1.slots_used):
            moves = []
            tx = []
            for j in (0, 1):
                s = int(ph1.sent[t, j])
                if s < 0:
                    tx.append("silent")
                    continue
                lab = packet_label(j + 1, s)
                tx.append(lab)
                d = int(ph1.dest[t, j])
                if d:
                    moves.append([lab, QueueTag.INITIAL.value, TAG_BY_CODE[d].value])
            self._slot(t, 1, ph1.alphas[t], ph1.cases[t], tx[0], tx[1], moves)
        pads = sorted(ph1.padding.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
        for (i, tag), k in pads:
            if k:
                self.lines.append(_dumps({"event": "pad", "tx": i, "queue": tag.value, "count": k}))
        if run.plan is not None:
            for kind, i, coded, parts in run.plan.events:
                self.lines.append(_dumps({"event": "combine", "kind": kind, "tx": i,
                                          "coded": coded, "parts": list(parts)}))
        if run.phase2 is None:
            return
        # Phase 2: each active transmitter sends a fresh combination of its
        # current segment; coefficients follow from the seed and the slot
        t0 = ph1.slots_used
        alphas, _ = stream.history(t0, t0 + run.phase2.duration)
        seg_of = np.full(run.phase2.duration, -1)
        sizes = {}
        for s, (a, b, n1, n2) in enumerate(run.phase2.segments):
            seg_of[a:b] = s
            sizes[s] = (n1, n2)
        for k in range(run.phase2.duration):
            s = int(seg_of[k])
            n1, n2 = sizes.get(s, (0, 0))
            tx1 = f"seg{s}/tx1" if n1 else "silent"
            tx2 = f"seg{s}/tx2" if n2 else "silent"
            eff = [int(x) for x in alphas[k]]
            if not n1:
                eff[0] = eff[1] = 0
            if not n2:
                eff[2] = eff[3] = 0
            case = CASE_BY_CODE[eff[0] * 8 + eff[1] * 4 + eff[2] * 2 + eff[3]]
            self._slot(t0 + k, 2, alphas[k], case, tx1, tx2, [])

    def result(self, res):
        self.lines.append(_dumps({"result": asdict(res)}))

    def text(self):
        body = "".join(line + "\n" for line in self.lines)
        digest = hashlib.sha256(body.encode()).hexdigest()
        return body + _dumps({"checksum": digest}) + "\n"

    def write(self, path):
        Path(path).write_text(self.text())


def read_trace(path):
    """Parse and verify a trace file; returns (header, records)."""
    raw = Path(path).read_bytes()
    if not raw.endswith(b"\n"):
        raise SchemaError("trace is truncated (no final newline)")
    lines = raw.decode().splitlines(keepends=True)
    if len(lines) < 3:
        raise SchemaError("trace is too short")
    try:
        objs = [json.loads(x) for x in lines]
    except json.JSONDecodeError as e:
        raise SchemaError(f"malformed trace line: {e}") from None
    head, last = objs[0], objs[-1]
    if not isinstance(head, dict) or head.get("schema") != SCHEMA:
        raise SchemaError(f"unknown schema {head.get('schema') if isinstance(head, dict) else head!r}")
    if set(last) != {"checksum"}:
        raise SchemaError("trace has no checksum record")
    if not any(isinstance(o, dict) and "result" in o for o in objs[-2:-1]):
        raise SchemaError("trace has no result record")
    body = "".join(lines[:-1]).encode()
    if hashlib.sha256(body).hexdigest() != last["checksum"]:
        raise ChecksumError("trace checksum does not match its contents")
    return head, objs[1:-1]


def replay(path):
    """Re-run the trial a trace describes and check it reproduces the file."""
    head, recs = read_trace(path)
    try:
        cfg = SimConfig(**head["config"]).validate()
        trial = int(head["trial"])
    except (TypeError, KeyError) as e:
        raise SchemaError(f"bad trace header: {e}") from None
    tracer = TraceWriter(cfg, trial)
    res = run_trial(cfg, trial, tracer)
    if tracer.text() != Path(path).read_text():
        raise ReplayMismatch("re-running the configuration gives a different trace")
    return res


# -- regions and sweeps ------------------------------------------------------------

REGIONS = {"capacity": analysis.capacity_region,
           "tdma": analysis.tdma_region,
           "rateless": analysis.rateless_region}


def region_rows(p_values):
    rows = []
    for p in p_values:
        for name, fn in REGIONS.items():
            for row in fn(p).csv_rows(p):
                rows.append([name, *row])
    return rows


def region_csv(p_values):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REGION_COLUMNS)
    for r in region_rows(p_values):
        w.writerow([r[0], repr(r[1]), repr(r[2]), repr(r[3]), r[4]])
    return buf.getvalue()


def sweep(p_grid, schemes=SCHEMES, m=2000, trials=5, seed=0, mode="adaptive", workers=1):
    """Region vertices per p plus empirical points for runnable schemes."""
    rows = []
    for p in p_grid:
        for name, fn in REGIONS.items():
            for pp, x, y, cid in fn(p).csv_rows(p):
                rows.append(["region", name, pp, x, y, "", "", cid])
        for scheme in schemes:
            if scheme == "theorem1" and Fraction(str(p)) != Fraction(1, 2):
                continue
            if p == 0:
                continue
            cfg = SimConfig(p=p, m=m, seed=seed, trials=trials, mode=mode, scheme=scheme)
            agg = run_experiment(cfg, workers=workers).summary
            if agg["r1"] is None:
                continue
            rows.append(["empirical", scheme, float(p), agg["r1"], agg["r2"],
                         agg["r1_stderr"], agg["r2_stderr"], ""])
    return rows


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([x if isinstance(x, str) else repr(float(x)) for x in r])
    return buf.getvalue()
