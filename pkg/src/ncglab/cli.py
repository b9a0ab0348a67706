"""Config-driven experiment runner.

Usage::

    ncglab verify --model toeplitz --elements s --alpha harmonic --dims 16,32,64
    ncglab summability --alpha harmonic --p 1,2,4 --Kmax 1048576 --format csv
    ncglab select --config select.yaml --budget 64
    ncglab qd --model toeplitz --elements "s,s*" --n 4,8,16,32 --dims 64
    ncglab index --symbol "1:1"
    ncglab models list

A YAML config file supplies any option; command-line flags override it.
Exit codes: 0 success, 1 ``--assert`` verdict mismatch, 2 usage error,
3 subsequence selection made no progress.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import yaml

from ncglab import __version__
from ncglab.dirac import AlphaSequence, NoProgress, ProjectionChain, select_chain
from ncglab.models import (
    MODEL_NAMES,
    RepresentationModel,
    SymbolPolynomial,
    SymbolVanishes,
    closure,
    parse_element,
    realize,
    winding_number,
)
from ncglab.opcore import Tolerance
from ncglab.qdiag import qd_scan
from ncglab.reports import dumps, plain, to_csv
from ncglab.verify import boundedness_scan, compactness_scan, offdiag_check, summability_profile

COMMANDS = ("verify", "summability", "select", "qd", "index")
EXIT_OK, EXIT_ASSERT, EXIT_USAGE, EXIT_NO_PROGRESS = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str = "verify"
    model: dict = field(default_factory=lambda: {"name": "toeplitz", "params": {}})
    elements: list = field(default_factory=lambda: ["s"])
    closure_depth: int = 3
    alpha: dict = field(default_factory=lambda: {"kind": "harmonic"})
    chain: object = "default"
    dims: list = field(default_factory=lambda: [16, 32, 64])
    tail_index: int = 2
    p_values: list = field(default_factory=lambda: [1.0, 2.0, 4.0])
    K_max: int = 2 ** 20
    multiplicities: list | None = None
    n_values: list = field(default_factory=lambda: [4, 8, 16, 32])
    reference_dim: int | None = None
    budget: int = 64
    symbol: str = "1:1"
    samples: int = 4096
    tolerances: dict = field(default_factory=lambda: {"exact_eq": 1e-10, "bound_slack": 1e-8})
    out: str | None = None
    format: str = "json"
    expect: str | None = None

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        data = dict(data)
        if "assert" in data:
            data["expect"] = data.pop("assert")
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.normalize()
        return cfg

    def normalize(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if isinstance(self.model, str):
            self.model = {"name": self.model, "params": {}}
        if not isinstance(self.model, dict) or set(self.model) - {"name", "params"}:
            raise UsageError("model must be a mapping with 'name' and optional 'params'")
        self.model = {"name": self.model.get("name"), "params": dict(self.model.get("params") or {})}
        if self.model["name"] not in MODEL_NAMES:
            raise UsageError(f"unknown model {self.model['name']!r}; expected one of {list(MODEL_NAMES)}")
        if isinstance(self.alpha, str):
            self.alpha = AlphaSequence.parse(self.alpha).describe()
        if not isinstance(self.alpha, dict):
            raise UsageError("alpha must be a string such as 'power:2' or a mapping")
        if isinstance(self.elements, str):
            self.elements = [self.elements]
        self.elements = [str(e) for e in self.elements]
        if self.chain != "default":
            self.chain = [int(r) for r in self.chain]
        self.dims = [int(d) for d in self.dims]
        self.n_values = [int(n) for n in self.n_values]
        self.p_values = [float(p) for p in self.p_values]
        if self.multiplicities is not None:
            self.multiplicities = [int(m) for m in self.multiplicities]
        self.tolerances = {**{"exact_eq": 1e-10, "bound_slack": 1e-8}, **self.tolerances}
        if set(self.tolerances) - {"exact_eq", "bound_slack"}:
            raise UsageError("tolerances accepts only exact_eq and bound_slack")
        self.tolerances = {k: float(v) for k, v in self.tolerances.items()}
        if self.format not in ("json", "csv"):
            raise UsageError("format must be json or csv")
        if self.expect is not None:
            self.expect = str(self.expect)

    def resolved(self) -> dict:
        """The run-defining part of the config (output location excluded)."""
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        del out["out"]
        return plain(out)

    def hash(self) -> str:
        canon = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class ReportBundle:
    meta: dict
    config: dict
    payloads: list
    exit_code: int = EXIT_OK
    rows: list = field(default_factory=list)

    def to_json(self) -> str:
        return dumps({"meta": self.meta, "config": self.config, "payloads": self.payloads}) + "\n"

    def payload_json(self) -> str:
        return dumps(self.payloads) + "\n"


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("NCGLAB_THREADS", "1")))
    except ValueError:
        raise UsageError("NCGLAB_THREADS must be an integer")


def _scan_payload(element: str, report) -> dict:
    return {"type": "scan", "scan": report.kind, "element": element, "verdict": report.verdict,
            "records": report.records, "evidence": report.evidence, "thresholds": report.thresholds,
            "norms": "truncated"}


def _run_verify(cfg, model, alpha, tol):
    payloads, rows = [], []
    workers = _threads()
    for text in cfg.elements:
        e = parse_element(text, model)
        for rep in (boundedness_scan(model, e, alpha, cfg.dims, workers=workers),
                    compactness_scan(model, e, alpha, cfg.dims, cfg.tail_index, workers=workers)):
            payloads.append(_scan_payload(text, rep))
            rows += [{"element": text, "scan": rep.kind, "N": r["N"], "value": r["value"],
                      "verdict": rep.verdict} for r in rep.records]
        N = cfg.dims[-1]
        chain = ProjectionChain.default(model, N)
        od = offdiag_check(realize(model, e, N), chain, alpha, tol)
        payloads.append({"type": "offdiag", "element": text, "N": N,
                         "check": "pass" if od.passed else "fail",
                         "commutator_norm": od.norm, "worst_ratio": od.worst_ratio,
                         "worst_index": od.worst_index, "skipped_pairs": len(od.skipped),
                         "thresholds": {"bound_slack": tol.bound_slack}})
    return payloads, rows


def _run_summability(cfg, alpha):
    payloads, rows = [], []
    for rep in summability_profile(alpha, cfg.multiplicities, cfg.p_values, cfg.K_max):
        payloads.append({"type": "summability", "p": rep.p, "verdict": rep.verdict,
                         "partial_sum": rep.value, "tail_bound": rep.tail_bound,
                         "checkpoints": [{"K": K, "partial_sum": S, "tail_bound": t}
                                         for K, S, t in rep.checkpoints],
                         "thresholds": rep.thresholds})
        rows += [{"p": rep.p, "K": K, "partial_sum": S, "tail_bound": t, "verdict": rep.verdict}
                 for K, S, t in rep.checkpoints]
    return payloads, rows


def _chain(cfg, model, N):
    if cfg.chain == "default":
        return ProjectionChain.default(model, N)
    return ProjectionChain(N, tuple(cfg.chain))


def _run_select(cfg, model, alpha):
    N = cfg.dims[-1]
    chain = _chain(cfg, model, N)
    base = [parse_element(t, model) for t in cfg.elements]
    elements = closure(model, base, cfg.closure_depth, N)
    try:
        cert = select_chain(elements, model, chain, alpha, cfg.budget)
    except NoProgress as exc:
        payload = {"type": "selection", "verdict": "no_progress", "step": exc.step,
                   "envelope": exc.envelope, "ambient_dim": N,
                   "elements": [str(e) for e in elements],
                   "steps": plain(exc.partial),
                   "examined": [{"index": n, "max_norm": v} for n, v in exc.examined]}
        rows = [dict(status="chosen", **plain(s)) for s in exc.partial]
        rows += [{"status": "rejected", "k": exc.step, "index": n, "rank": chain.rank(n),
                  "max_norm": v, "envelope": exc.envelope,
                  "active": min(exc.step, len(elements))} for n, v in exc.examined]
        return [payload], rows, EXIT_NO_PROGRESS
    payload = {"type": "selection", "verdict": "certified", **plain(cert),
               "pre_activation_total": cert.pre_activation_total}
    rows = [dict(status="chosen", **plain(s)) for s in cert.steps]
    return [payload], rows, EXIT_OK


def _run_qd(cfg, model):
    N = cfg.dims[-1]
    chain = _chain(cfg, model, N)
    elements = [parse_element(t, model) for t in cfg.elements]
    table = qd_scan(model, elements, chain, cfg.n_values, cfg.reference_dim)
    payload = {"type": "qd", "verdict": table.verdict, "reference_dim": table.reference_dim,
               "ambient_dim": N, "rows": table.rows, "thresholds": table.thresholds}
    return [payload], table.rows


def _run_index(cfg):
    phi = SymbolPolynomial.parse(cfg.symbol)
    w, residual = winding_number(phi, cfg.samples)
    row = {"symbol": str(phi), "samples": cfg.samples, "winding": w, "index": -w, "residual": residual}
    return [{"type": "index", **row}], [row]


def run(cfg: ExperimentConfig) -> ReportBundle:
    """Execute ``cfg`` and return the report bundle (nothing is written)."""
    try:
        model = RepresentationModel(cfg.model["name"], cfg.model["params"])
        alpha = AlphaSequence(**cfg.alpha)
        tol = Tolerance(**cfg.tolerances)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    h = cfg.hash()
    code = EXIT_OK
    try:
        if cfg.command == "verify":
            payloads, rows = _run_verify(cfg, model, alpha, tol)
        elif cfg.command == "summability":
            payloads, rows = _run_summability(cfg, alpha)
        elif cfg.command == "select":
            payloads, rows, code = _run_select(cfg, model, alpha)
        elif cfg.command == "qd":
            payloads, rows = _run_qd(cfg, model)
        else:
            payloads, rows = _run_index(cfg)
    except SymbolVanishes as exc:
        raise UsageError(f"no Fredholm index: {exc}") from exc
    except (ValueError, IndexError) as exc:
        raise UsageError(str(exc)) from exc
    for p in payloads:
        p["config_hash"] = h
    payloads = plain(payloads)
    if code == EXIT_OK and cfg.expect is not None:
        verdicts = [p["verdict"] for p in payloads if "verdict" in p]
        if not verdicts:
            raise UsageError(f"--assert given but {cfg.command} reports no verdicts")
        if any(v != cfg.expect for v in verdicts):
            code = EXIT_ASSERT
    meta = {"tool": "ncglab", "version": __version__, "timestamp": _timestamp(), "config_hash": h,
            "command": cfg.command}
    return ReportBundle(meta, cfg.resolved(), payloads, code, plain(rows))


def _write(bundle: ReportBundle, cfg: ExperimentConfig) -> None:
    text = bundle.to_json() if cfg.format == "json" else to_csv(cfg.command, bundle.rows)
    if cfg.out:
        path = Path(cfg.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc))
    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--model", help=f"one of {', '.join(MODEL_NAMES)}")
    common.add_argument("--elements", help="comma separated element words, e.g. 's,s*' or 'e(1,2)'")
    common.add_argument("--closure-depth", type=int, dest="closure_depth")
    common.add_argument("--alpha", help="harmonic | power:q | geometric:rho | custom:a1,a2,...")
    common.add_argument("--chain", help="'default' or comma separated ranks")
    common.add_argument("--dims", type=_csv_list(int), help="truncation dimensions")
    common.add_argument("--tail-index", type=int, dest="tail_index")
    common.add_argument("--p", type=_csv_list(float), dest="p_values")
    common.add_argument("--Kmax", type=int, dest="K_max")
    common.add_argument("--n", type=_csv_list(int), dest="n_values")
    common.add_argument("--reference-dim", type=int, dest="reference_dim")
    common.add_argument("--budget", type=int)
    common.add_argument("--symbol", help="degree:coefficient pairs, e.g. '1:1' or '0:2,1:-1'")
    common.add_argument("--samples", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--assert", dest="expect", metavar="VERDICT")

    parser = argparse.ArgumentParser(prog="ncglab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    models = sub.add_parser("models")
    models.add_argument("action", choices=("list",))
    models.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def _split_elements(text: str) -> list:
    # commas inside e(i,j) / b(k,i,j) do not separate elements
    out, depth, cur = [], 0, ""
    for ch in text:
        depth += ch == "("
        depth -= ch == ")"
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


def config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            loaded = yaml.safe_load(Path(args.config).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if loaded is not None and not isinstance(loaded, dict):
            raise UsageError("config file must hold a mapping")
        data.update(loaded or {})
    data["command"] = args.command
    if args.model is not None:
        params = data.get("model", {}).get("params", {}) if isinstance(data.get("model"), dict) else {}
        data["model"] = {"name": args.model, "params": params}
    if args.elements is not None:
        data["elements"] = _split_elements(args.elements)
    if args.chain is not None:
        data["chain"] = "default" if args.chain == "default" else _csv_list(int)(args.chain)
    for key in ("closure_depth", "alpha", "dims", "tail_index", "p_values", "K_max", "n_values",
                "reference_dim", "budget", "symbol", "samples", "out", "format", "expect"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    return ExperimentConfig.from_mapping(data)


def _models_list(fmt: str) -> str:
    entries = [RepresentationModel(name, {"blocks": [[1, 1]]} if name == "rfd" else {}).describe()
               for name in MODEL_NAMES]
    if fmt == "json":
        return dumps([{"name": e["name"], **e["metadata"]} for e in entries]) + "\n"
    return to_csv("models", [{"name": e["name"], **e["metadata"]} for e in entries])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "models":
        sys.stdout.write(_models_list(args.format))
        return EXIT_OK
    try:
        cfg = config_from_args(args)
        bundle = run(cfg)
    except UsageError as exc:
        print(f"ncglab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write(bundle, cfg)
    return bundle.exit_code


if __name__ == "__main__":
    sys.exit(main())
