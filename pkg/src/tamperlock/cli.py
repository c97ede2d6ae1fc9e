"""``tamperlock`` command line: experiments that write reproducible CSV.

Precedence for every setting is flag > config file (``key=value`` lines) >
subcommand default. Each CSV row ends with the master seed and a hash of the
resolved configuration. Exit codes: 0 ok, 2 a checked claim failed, 3 usage.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import attack, experiments
from .attack import CSV_COLUMNS as ATTACK_COLUMNS
from .bridge import PrcWatermarkScheme, UniformModel, code_from_watermark
from .channels import parse_channel
from .core import DecodeOutcome, make_rng
from .hamming import HammingCode, save_key
from .ldpc import PrcKey, default_rows
from .prf import CounterStore, PrfKey, wrap_code

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 2, 3


class UsageError(Exception):
    pass


DEFAULTS = {
    "verify-impossibility": {"code": "hamming", "n": 8, "q": 2, "delta": 0.5, "exact": True, "trials": 100000, "seed": 0},
    "sweep": {"n": 64, "q": None, "delta": 0.5, "alphas": "0.05:0.95:0.05", "trials": 1000, "seed": 0},
    "soundness": {"n": 64, "q": None, "delta": 0.5, "trials": 10000, "seed": 0, "wrap": False, "channel": None},
    "bp-curve": {"n": 512, "rows": None, "row_weight": 6, "max_iters": 100, "threshold": 4.0, "bp_prior": 0.15,
                 "grid": "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.48,0.5", "trials": 200, "seed": 0},
    "attack": {"scenario": "crop_resize", "n": 512, "rows": None, "row_weight": 6, "max_iters": 100,
               "threshold": 4.0, "bp_prior": 0.15, "trials": 200, "seed": 0},
    "keygen": {"kind": "hamming", "n": 64, "q": None, "delta": 0.5, "row_weight": 6, "rows": None, "seed": 0},
    "mask-demo": {"n": 64, "q": None, "delta": 0.5, "trials": 3, "seed": 0, "counter": None},
}
_BOOL = {"exact", "wrap"}
_INT = {"n", "q", "trials", "seed", "rows", "row_weight", "max_iters"}
_FLOAT = {"delta", "threshold", "bp_prior"}


@dataclass
class RunConfig:
    subcommand: str
    values: dict = field(default_factory=dict)
    out: str | None = None

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def digest(self) -> str:
        blob = json.dumps({"cmd": self.subcommand, **self.values}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _coerce(name: str, raw):
    if raw is None or not isinstance(raw, str):
        return raw
    if raw.lower() in ("none", ""):
        return None
    if name in _BOOL:
        return raw.lower() in ("1", "true", "yes", "on")
    if name in _INT:
        return int(raw)
    if name in _FLOAT:
        return float(raw)
    return raw


def read_config_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        values[k.strip().replace("-", "_")] = v.strip()
    return values


def resolve_config(cmd: str, flags: dict) -> RunConfig:
    values = dict(DEFAULTS[cmd])
    if flags.get("config"):
        for k, v in read_config_file(flags["config"]).items():
            if k not in values:
                raise UsageError(f"unknown config key {k!r} for {cmd}")
            values[k] = _coerce(k, v)
    for k, v in flags.items():
        if k in values and v is not None:
            values[k] = v
    if "q" in values and values["q"] is None and cmd != "bp-curve":
        values["q"] = values["n"] ** 2 if cmd != "verify-impossibility" else 2
    return RunConfig(cmd, values, flags.get("out"))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tamperlock", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(p, *, code_params=True):
        if code_params:
            p.add_argument("--n", type=int)
            p.add_argument("--q", type=int)
            p.add_argument("--delta", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--config")
        return p

    p = common(subs.add_parser("verify-impossibility", help="label masses of uniform words; checks the dilemma"))
    p.add_argument("--code", choices=("hamming", "prc"))
    p.add_argument("--exact", dest="exact", action="store_const", const=True)
    p.add_argument("--sampled", dest="exact", action="store_const", const=False)

    p = common(subs.add_parser("sweep", help="tamper detection and soundness across tampering rates"))
    p.add_argument("--alphas", help="comma list or start:stop:step")

    p = common(subs.add_parser("soundness", help="uniform-input Monte Carlo against the Chernoff bound"))
    p.add_argument("--wrap", action="store_const", const=True, help="measure the PRF-masked code")
    p.add_argument("--channel", help="also measure tamper detection under this channel spec")

    def ldpc_flags(p):
        p.add_argument("--n", type=int)
        p.add_argument("--rows", type=int)
        p.add_argument("--row-weight", dest="row_weight", type=int)
        p.add_argument("--max-iters", dest="max_iters", type=int)
        p.add_argument("--threshold", type=float)
        p.add_argument("--bp-prior", dest="bp_prior", type=float)

    p = common(subs.add_parser("bp-curve", help="detection after BP across flip rates"), code_params=False)
    ldpc_flags(p)
    p.add_argument("--grid", help="comma list of flip rates in [0, 0.5]")

    p = common(subs.add_parser("attack", help="run a preset latent attack scenario"), code_params=False)
    ldpc_flags(p)
    p.add_argument("--scenario", help="preset name or 'all'")

    p = subs.add_parser("keygen", help="write a Hamming key or LDPC matrix file")
    p.add_argument("--kind", choices=("hamming", "ldpc"))
    p.add_argument("--n", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--rows", type=int)
    p.add_argument("--row-weight", dest="row_weight", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--config")

    p = common(subs.add_parser("mask-demo", help="mask Hamming codewords under a durable counter"))
    p.add_argument("--counter", help="counter file; defaults to a fresh temporary one")
    return parser


def _float_list(text: str) -> list[float]:
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


def _write_csv(cfg: RunConfig, columns, rows, stdout) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns) + ["config_hash"], lineterminator="\n")
    writer.writeheader()
    digest = cfg.digest()
    for row in rows:
        writer.writerow({**row, "config_hash": digest})
    if cfg.out:
        Path(cfg.out).write_text(buf.getvalue())
    else:
        stdout.write(buf.getvalue())


def _fmt(x) -> str:
    return f"{float(x):.6f}"


def cmd_verify_impossibility(cfg: RunConfig, stdout) -> int:
    if cfg.code == "hamming":
        code = HammingCode.build(cfg.n, cfg.q, cfg.delta)
    else:
        if cfg.q != 2:
            raise UsageError("the prc code is binary; use --q 2")
        scheme = PrcWatermarkScheme(n=cfg.n, r=max(1, cfg.n // 4), row_weight=3, detect_threshold=0.5)
        code = code_from_watermark(scheme, UniformModel(cfg.n))
    if cfg.exact and cfg.q**cfg.n > experiments.EXACT_STATE_LIMIT:
        raise UsageError(f"exact mode needs q^n <= 2^20; got {cfg.q}^{cfg.n}")
    report = experiments.verify_impossibility(code, exact=cfg.exact, samples=cfg.trials, seed=cfg.seed)
    columns = ("code", "n", "q", "delta", "mode", "states", "p_valid", "p_invalid", "p_tampered",
               "conflict_margin", "soundness_error", "tamper_miss", "partition_ok", "dilemma_ok", "seed")
    row = {
        "code": cfg.code, "n": cfg.n, "q": cfg.q, "delta": f"{cfg.delta:g}",
        "mode": "exact" if report.exact else "sampled", "states": report.states,
        "p_valid": _fmt(report.p_valid_uniform), "p_invalid": _fmt(report.p_invalid_uniform),
        "p_tampered": _fmt(report.p_tampered_uniform), "conflict_margin": _fmt(report.conflict_margin),
        "soundness_error": _fmt(report.soundness_error), "tamper_miss": _fmt(report.tamper_miss),
        "partition_ok": int(report.partition_holds), "dilemma_ok": int(report.dilemma_holds), "seed": cfg.seed,
    }
    _write_csv(cfg, columns, [row], stdout)
    return EXIT_OK if report.partition_holds and report.dilemma_holds else EXIT_CHECK_FAILED


def cmd_sweep(cfg: RunConfig, stdout) -> int:
    rows = experiments.sweep_threshold(cfg.n, cfg.q, cfg.delta, _float_list(cfg.alphas), cfg.trials, cfg.seed)
    _write_csv(cfg, experiments.SWEEP_COLUMNS, rows, stdout)
    return EXIT_OK


def cmd_soundness(cfg: RunConfig, stdout) -> int:
    code = HammingCode.build(cfg.n, cfg.q, cfg.delta)
    key = code.kgen(make_rng((cfg.seed, 0)))
    if cfg.wrap:
        with tempfile.TemporaryDirectory() as tmp:
            target = wrap_code(code, PrfKey.generate(seed=(cfg.seed, 2)), CounterStore(Path(tmp) / "ctr"))
            est = experiments.soundness_mc(target, cfg.trials, (cfg.seed, 1), target.kgen(make_rng((cfg.seed, 0))))
    else:
        est = experiments.soundness_mc(code, cfg.trials, (cfg.seed, 1), key)
    summary = experiments.hamming_soundness_summary(code, est)
    columns = ["code", "n", "q", "delta", "trials", "nonvalid_rate", "rate_lo", "rate_hi",
               "soundness_bound", "exact_nonvalid"]
    row = {"code": "hamming+prf" if cfg.wrap else "hamming", "n": cfg.n, "q": cfg.q,
           "delta": f"{cfg.delta:g}", "trials": cfg.trials}
    row.update({k: f"{v:.6g}" for k, v in summary.items()})
    if cfg.channel:
        if cfg.wrap:
            raise UsageError("--channel is measured on the unwrapped code only")
        td = experiments.tamper_detect_mc(code, parse_channel(cfg.channel, cfg.q), cfg.trials, (cfg.seed, 3), key)
        lo, hi = td.interval
        columns += ["channel", "tamper_detect", "td_lo", "td_hi"]
        row.update({"channel": cfg.channel, "tamper_detect": _fmt(td.rate), "td_lo": _fmt(lo), "td_hi": _fmt(hi)})
    row["seed"] = cfg.seed
    _write_csv(cfg, columns + ["seed"], [row], stdout)
    # The bound caps P[not invalid]; a Wilson interval entirely above it contradicts it.
    return EXIT_CHECK_FAILED if summary["rate_lo"] > summary["soundness_bound"] else EXIT_OK


def _prc_key(cfg: RunConfig) -> PrcKey:
    rows = cfg.rows if cfg.rows is not None else default_rows(cfg.n)
    return PrcKey.generate(cfg.n, rows, cfg.row_weight, seed=(cfg.seed, 0), detect_threshold=cfg.threshold)


def cmd_bp_curve(cfg: RunConfig, stdout) -> int:
    rows = attack.threshold_scan(_prc_key(cfg), _float_list(cfg.grid), cfg.trials, cfg.seed,
                                 max_iters=cfg.max_iters, bp_prior=cfg.bp_prior)
    _write_csv(cfg, ATTACK_COLUMNS, rows, stdout)
    return EXIT_OK


def cmd_attack(cfg: RunConfig, stdout) -> int:
    presets = attack.builtin_scenarios()
    if cfg.scenario == "all":
        scenarios = presets
    else:
        try:
            scenarios = [attack.get_scenario(cfg.scenario)]
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    key = _prc_key(cfg)
    rows = []
    for sc in scenarios:
        # Stream by table position, so one preset reproduces its row from a full run.
        rep = attack.run_scenario(sc, key, cfg.trials, cfg.seed, max_iters=cfg.max_iters,
                                  bp_prior=cfg.bp_prior, stream=presets.index(sc))
        print(
            f"{sc.name}: flip={sc.pre_bp_flip_rate:.4f} detection={rep.detection_rate:.3f} "
            f"pre={rep.mean_pre_bp_error:.4f} post={rep.mean_post_bp_error:.4f} "
            f"(image-pipeline post-BP: {sc.expected_post_bp_error})",
            file=sys.stderr,
        )
        rows.append(rep.csv_row())
    _write_csv(cfg, ATTACK_COLUMNS, rows, stdout)
    return EXIT_OK


def cmd_keygen(cfg: RunConfig, stdout) -> int:
    if cfg.kind == "hamming":
        key = HammingCode.build(cfg.n, cfg.q, cfg.delta).kgen(cfg.seed)
        if cfg.out:
            save_key(key, cfg.out)
        else:
            p = key.params
            stdout.write(f"TAMPERLOCK-HK v1 n={p.n} q={p.q} delta={p.delta!r}\n{key.sk.to_text()}\n")
    else:
        rows = cfg.rows if cfg.rows is not None else default_rows(cfg.n)
        H = PrcKey.generate(cfg.n, rows, cfg.row_weight, seed=cfg.seed).H
        if cfg.out:
            H.save(cfg.out)
        else:
            stdout.write(H.to_text())
    return EXIT_OK


def cmd_mask_demo(cfg: RunConfig, stdout) -> int:
    code = HammingCode.build(cfg.n, cfg.q, cfg.delta)
    kappa = PrfKey.generate(seed=(cfg.seed, 1))
    with tempfile.TemporaryDirectory() as tmp:
        store = CounterStore(cfg.counter or Path(tmp) / "counter")
        wrapped = wrap_code(code, kappa, store)
        key = wrapped.kgen(make_rng((cfg.seed, 0)))
        rows = []
        for _ in range(cfg.trials):
            masked = wrapped.enc(key)
            label = wrapped.dec(key, masked)
            rows.append({"pi": masked.pi, "n": cfg.n, "q": cfg.q, "label": str(label),
                         "masked": masked.to_wire(), "seed": cfg.seed})
    _write_csv(cfg, ("pi", "n", "q", "label", "masked", "seed"), rows, stdout)
    ok = all(r["label"] == str(DecodeOutcome.VALID) for r in rows)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


COMMANDS = {
    "verify-impossibility": cmd_verify_impossibility,
    "sweep": cmd_sweep,
    "soundness": cmd_soundness,
    "bp-curve": cmd_bp_curve,
    "attack": cmd_attack,
    "keygen": cmd_keygen,
    "mask-demo": cmd_mask_demo,
}


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    cmd = args.pop("cmd")
    try:
        cfg = resolve_config(cmd, args)
        return COMMANDS[cmd](cfg, stdout)
    except (UsageError, ValueError, OSError) as exc:
        print(f"tamperlock {cmd}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
