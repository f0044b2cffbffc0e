"""Command-line frontend.

Exit status: 0 when the analysis ran (whatever the verdict), 2 for unreadable
or malformed input, 3 when the oracle ran out of its state budget.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, TextIO

from . import __version__
from .colors import PERMISSIVE, STRICT, check_colored
from .formats import NetOutcome, emit_native, emit_report, emit_trace, load_net, render_pairs
from .net import NetError, is_acyclic, is_free_choice_net, validate
from .oracle import (CAP_EXCEEDED, DEFAULT_CAP, DEFAULT_COLORED_CAP, CapExceeded, check_equivalence, oracle_is_k_sound,
                     oracle_is_sound, oracle_summary, summary_of_transformer)
from .reduction import COMPLETELY_REDUCED, Verdict, reduce

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAP = 3

COMMANDS = ("validate", "check", "reduce", "summarize", "oracle", "equiv", "batch", "generate")


@dataclass
class RunConfig:
    command: str
    paths: List[str]
    mode: Optional[str] = None
    cap: int = DEFAULT_CAP
    colored_cap: int = DEFAULT_COLORED_CAP
    trace: Optional[str] = None
    emit: Optional[str] = None
    report: str = "text"
    k: Optional[int] = None
    jobs: int = 4
    seed: int = 0
    count: int = 20
    extra: dict = field(default_factory=dict)


def _counts_line(v: Verdict) -> str:
    return "rules: " + " ".join(f"{k}={n}" for k, n in v.counts.items())


def _reduce_file(cfg: RunConfig, path: str):
    net = load_net(path, cfg.mode)
    return net, reduce(net)


def cmd_validate(cfg: RunConfig, out: TextIO) -> int:
    for path in cfg.paths:
        net = load_net(path, cfg.mode, check=False)
        problems = [str(v) for v in validate(net)]
        if not problems:
            problems = check_colored(net)
        prefix = f"{path}: " if len(cfg.paths) > 1 else ""
        if problems:
            for p in problems:
                print(f"{prefix}{p}", file=out)
        else:
            print(f"{prefix}valid", file=out)
    return EXIT_OK


def cmd_check(cfg: RunConfig, out: TextIO) -> int:
    net, v = _reduce_file(cfg, cfg.paths[0])
    print(v.label, file=out)
    print(_counts_line(v), file=out)
    if v.reason:
        print(f"reason: {v.reason}", file=out)
    if v.kind != COMPLETELY_REDUCED and v.net is not None:
        print(f"reduced by: {v.reduced_by:.1f}%", file=out)
    _write_trace(cfg, net, v)
    return EXIT_OK


def _write_trace(cfg: RunConfig, net, v: Verdict):
    if cfg.trace:
        with open(cfg.trace, "w", encoding="utf-8") as fh:
            fh.write(emit_trace(net, v.trace))


def cmd_reduce(cfg: RunConfig, out: TextIO) -> int:
    net, v = _reduce_file(cfg, cfg.paths[0])
    residual = v.net if v.net is not None else net
    text = f"# verdict: {v.label}\n" + emit_native(residual)
    if cfg.emit:
        with open(cfg.emit, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(v.label, file=out)
    else:
        out.write(text)
    _write_trace(cfg, net, v)
    return EXIT_OK


def cmd_summarize(cfg: RunConfig, out: TextIO) -> int:
    net, v = _reduce_file(cfg, cfg.paths[0])
    _write_trace(cfg, net, v)
    if v.kind != COMPLETELY_REDUCED:
        print(f"no summary: {v.label}" + (f" ({v.reason})" if v.reason else ""), file=sys.stderr)
        return EXIT_OK
    (t,) = v.net.transitions
    for line in render_pairs(summary_of_transformer(v.net, t)):
        print(line, file=out)
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, out: TextIO) -> int:
    net = load_net(cfg.paths[0], cfg.mode)
    if cfg.k is not None:
        r = oracle_is_k_sound(net, cfg.k, cfg.cap)
        print(f"{cfg.k}-sound: {r.sound}", file=out)
    else:
        r = oracle_is_sound(net, cfg.cap)
        print(f"sound: {r.sound}", file=out)
    print(f"states: {r.states}", file=out)
    if r.sound == CAP_EXCEEDED:
        return EXIT_CAP
    if r.stuck_marking is not None:
        marking = " ".join(f"{net.name(p)}:{n}" for p, n in sorted(r.stuck_marking.items()))
        print(f"stuck marking: {marking}", file=out)
        print("path: " + " ".join(net.name(t) for t in r.stuck_path), file=out)
    if r.dead_transitions:
        print("never fired: " + " ".join(net.name(t) for t in r.dead_transitions), file=out)
    if cfg.k is None:
        try:
            pairs = oracle_summary(net, cfg.colored_cap)
        except CapExceeded:
            print("summary: cap-exceeded", file=out)
            return EXIT_CAP
        print(f"summary: {len(pairs)} pairs", file=out)
        for line in render_pairs(pairs):
            print(line, file=out)
    return EXIT_OK


def cmd_equiv(cfg: RunConfig, out: TextIO) -> int:
    """Compare the reduction result against explicit exploration of the input."""
    net, v = _reduce_file(cfg, cfg.paths[0])
    try:
        if v.kind == COMPLETELY_REDUCED:
            sound = oracle_is_sound(net, cfg.cap)
            if sound.sound == CAP_EXCEEDED:
                raise CapExceeded(cfg.cap)
            expected = oracle_summary(net, cfg.colored_cap)
            (t,) = v.net.transitions
            got = summary_of_transformer(v.net, t)
            ok = sound.is_sound and got == expected
            print("equivalent" if ok else "not equivalent", file=out)
            if not sound.is_sound:
                print("  oracle says the net is unsound", file=out)
            for line in render_pairs(got - expected):
                print(f"  only in reduction: {line}", file=out)
            for line in render_pairs(expected - got):
                print(f"  only in oracle: {line}", file=out)
        elif v.net is not None:
            rep = check_equivalence(net, v.net, cfg.cap, cfg.colored_cap)
            print(f"{v.label}: residual net " + rep.describe(), file=out)
        else:
            print(f"{v.label}: {v.reason}", file=out)
    except CapExceeded as exc:
        print(str(exc), file=out)
        return EXIT_CAP
    return EXIT_OK


def _outcome(path: str, mode: Optional[str]) -> NetOutcome:
    net = load_net(path, mode)
    v = reduce(net)
    return NetOutcome(os.path.basename(path), is_acyclic(net), is_free_choice_net(net), v.kind == COMPLETELY_REDUCED,
                      len(net.places), len(net.transitions), v.reduced_by, len(v.trace))


def _batch_files(paths: Sequence[str]) -> List[str]:
    files = []
    for p in paths:
        if os.path.isdir(p):
            files += sorted(os.path.join(p, f) for f in os.listdir(p) if f.endswith((".cwf", ".pnml", ".xml")))
        else:
            files.append(p)
    return files


def cmd_batch(cfg: RunConfig, out: TextIO) -> int:
    files = _batch_files(cfg.paths)

    def job(path):
        try:
            return _outcome(path, cfg.mode), None
        except (NetError, OSError, ValueError) as exc:
            return None, f"{path}: {exc}"

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        results = list(pool.map(job, files))
    failed = [err for _, err in results if err]
    for err in failed:
        print(err, file=sys.stderr)
    out.write(emit_report([o for o, _ in results if o is not None], cfg.report))
    return EXIT_INPUT if failed else EXIT_OK


def cmd_generate(cfg: RunConfig, out: TextIO) -> int:
    from .generate import corpus
    target = cfg.paths[0]
    os.makedirs(target, exist_ok=True)
    for s in corpus(cfg.seed, cfg.count, colored=cfg.extra.get("colored", False)):
        with open(os.path.join(target, f"{s.name}.cwf"), "w", encoding="utf-8") as fh:
            fh.write(emit_native(s.net))
    print(f"wrote {cfg.count} nets to {target}", file=out)
    return EXIT_OK


HANDLERS = {"validate": cmd_validate, "check": cmd_check, "reduce": cmd_reduce, "summarize": cmd_summarize,
            "oracle": cmd_oracle, "equiv": cmd_equiv, "batch": cmd_batch, "generate": cmd_generate}


def run(cfg: RunConfig, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    # streams are looked up per call so that redirection after import still works
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        return HANDLERS[cfg.command](cfg, out)
    except (NetError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=err)
        return EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wfreduce", description="Soundness and summaries of colored workflow nets.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=(STRICT, PERMISSIVE), help="override the document's mode")
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="oracle state cap (uncolored)")
    common.add_argument("--colored-cap", type=int, default=DEFAULT_COLORED_CAP, help="oracle state cap (colored)")
    common.add_argument("--trace", metavar="PATH", help="write the reduction trace as JSON")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", parents=[common], help="report workflow-net and color violations")
    p.add_argument("paths", nargs="+")
    for name, text in (("check", "reduce and print the verdict"), ("summarize", "print the summary relation")):
        sub.add_parser(name, parents=[common], help=text).add_argument("paths", nargs=1)
    p = sub.add_parser("reduce", parents=[common], help="print the residual net")
    p.add_argument("paths", nargs=1)
    p.add_argument("--emit", metavar="PATH", help="write the residual net here instead of stdout")
    p = sub.add_parser("oracle", parents=[common], help="explore the state space")
    p.add_argument("paths", nargs=1)
    p.add_argument("--k", type=int, help="check k-soundness instead")
    p = sub.add_parser("equiv", parents=[common], help="compare reduction against exploration")
    p.add_argument("paths", nargs=1)
    p = sub.add_parser("batch", parents=[common], help="statistics table over files or directories")
    p.add_argument("paths", nargs="+")
    p.add_argument("--report", choices=("text", "csv"), default="text")
    p.add_argument("--jobs", type=int, default=4)
    p = sub.add_parser("generate", help="write a random corpus")
    p.add_argument("paths", nargs=1, metavar="DIR")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--colored", action="store_true")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "k", None) is not None and args.k < 1:
        print("error: --k must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    cfg = RunConfig(args.command, list(args.paths), mode=getattr(args, "mode", None),
                    cap=getattr(args, "cap", DEFAULT_CAP), colored_cap=getattr(args, "colored_cap", DEFAULT_COLORED_CAP),
                    trace=getattr(args, "trace", None), emit=getattr(args, "emit", None),
                    report=getattr(args, "report", "text"), k=getattr(args, "k", None), jobs=getattr(args, "jobs", 4),
                    seed=getattr(args, "seed", 0), count=getattr(args, "count", 20),
                    extra={"colored": getattr(args, "colored", False)})
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
