"""Command line entry points: ``label-code``, ``detect`` and ``simulate``."""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .lattice import d4_qpsk_lattice
from .sim import SimConfig, detect, fer_sweep
from .tanner import build_graph, to_dot

# config-file key -> (SimConfig field, parser)
_SIM_KEYS = {
    "scenario": ("scenario", str),
    "ebno": ("ebno_db_list", lambda s: _float_list(s)),
    "packets": ("packets", int),
    "codewords": ("codewords_per_packet", int),
    "survivors": ("survivors", int),
    "outer": ("outer_iters", int),
    "inner": ("inner_iters", int),
    "tg_iters": ("tg_iters", int),
    "init": ("init_scheme", str),
    "seed": ("seed", int),
    "depth": ("interleaver_depth", int),
    "workers": ("workers", int),
    "llr": ("llr_form", str),
    "out": (None, str),
}


def _float_list(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(t) for t in text.replace(",", " ").split())


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes in keys read as underscores."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _SIM_KEYS:
                raise ValueError(f"{path}:{n}: unknown key {key!r}")
            out[key] = _SIM_KEYS[key][1](value)
    return out


def _fmt(t):
    return "".join(str(v) for v in t)


def cmd_label_code(args):
    ll = d4_qpsk_lattice()
    code = ll.code
    lines = [
        f"group sizes      : {code.group_sizes}",
        f"labels ({len(code.labels):2d})      : " + " ".join(_fmt(l) for l in code.labels),
        f"dual words ({len(ll.duals.dual):2d})  : " + " ".join(_fmt(v) for v in ll.duals.dual),
        f"check generators : " + " ".join(_fmt(v) for v in ll.duals.vstar),
        f"region labels    : " + " ".join(_fmt(l) for l in code.region_labels),
    ]
    print("\n".join(lines))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kind", "tuple"])
            for kind, rows in (
                ("label", code.labels),
                ("dual", ll.duals.dual),
                ("generator", ll.duals.vstar),
                ("region_label", code.region_labels),
            ):
                for r in rows:
                    w.writerow([kind, " ".join(str(v) for v in r)])
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(to_dot(build_graph(ll.duals, code)))
    return 0


def cmd_detect(args):
    with open(args.instance) as fh:
        inst = json.load(fh)
    try:
        y = np.asarray(inst["y"], dtype=float)
        Hbar = np.asarray(inst["Hbar_re"], dtype=float) + 1j * np.asarray(inst["Hbar_im"], dtype=float)
        N0 = float(inst["N0"])
    except KeyError as exc:
        raise SystemExit(f"instance file lacks field {exc}")
    res = detect(y, Hbar, N0, survivors=args.survivors, init_scheme=args.init, tg_iters=args.tg_iters)
    np.set_printoptions(precision=4, suppress=True)
    print(f"Pr(H1) = {res.p_h1:.6f}  Pr(H2) = {1 - res.p_h1:.6f}")
    for k in range(2):
        print(f"hypothesis {k + 1} label APPs:")
        for lab, p in zip(res.labels, res.label_probs[k]):
            print(f"  {_fmt(lab)}  {p:.6f}")
        print(f"hypothesis {k + 1} coordinate extrinsics:")
        for j, (a, p) in enumerate(zip(res.alphabets, res.coord_extrinsic[k])):
            pairs = "  ".join(f"{v:+g}:{q:.6f}" for v, q in zip(a, p))
            print(f"  c{j}  {pairs}")
    print(f"decision: codeword {res.codeword} (hypothesis {res.hypothesis}, chi = {res.chi.astype(int).tolist()})")
    print(f"S =\n{res.S}")
    return 0


def _sim_config(args):
    values = {}
    if args.config:
        values.update(read_config(args.config))
    for key in _SIM_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    out = values.pop("out", None)
    fields = {_SIM_KEYS[k][0]: v for k, v in values.items()}
    return SimConfig(**fields), out


def cmd_simulate(args):
    cfg, out = _sim_config(args)
    text = fer_sweep(cfg, path=out)
    if out is None:
        sys.stdout.write(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="latticebp", description="Lattice BP detection of a superorthogonal space-time code.")
    sub = p.add_subparsers(dest="command", required=True)

    lc = sub.add_parser("label-code", help="print the D4 label code, its dual and the check generators")
    lc.add_argument("--csv", help="also write the tables as CSV")
    lc.add_argument("--dot", help="write the Tanner graph in DOT format")
    lc.set_defaults(func=cmd_label_code)

    d = sub.add_parser("detect", help="detect one received block from a JSON instance file")
    d.add_argument("instance", help="JSON with y (8 reals), Hbar_re, Hbar_im (2x2) and N0")
    d.add_argument("--survivors", type=int, default=1)
    d.add_argument("--init", default="projection", choices=("projection", "simplified", "probability"))
    d.add_argument("--tg-iters", dest="tg_iters", type=int, default=1)
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("simulate", help="Monte Carlo FER sweep written as CSV")
    s.add_argument("--config", help="key = value file; flags override its entries")
    s.add_argument("--scenario", choices=("quasistatic", "fast"))
    s.add_argument("--ebno", type=_float_list, help="Eb/N0 points in dB, comma or space separated")
    s.add_argument("--packets", type=int)
    s.add_argument("--codewords", type=int)
    s.add_argument("--survivors", type=int)
    s.add_argument("--outer", type=int)
    s.add_argument("--inner", type=int)
    s.add_argument("--tg-iters", dest="tg_iters", type=int)
    s.add_argument("--init", choices=("projection", "simplified", "probability"))
    s.add_argument("--seed", type=int)
    s.add_argument("--depth", type=int, help="interleaver depth (fast fading)")
    s.add_argument("--workers", type=int)
    s.add_argument("--llr", choices=("squared", "exact"))
    s.add_argument("--out", help="CSV path (stdout when omitted)")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
