"""Command line driver.

``chainlab run|sweep|render --config <json> [--h H] [--n N] [--eps E]
[--beta B] [--seed S] [--out DIR]``

Exit codes: 0 success, 2 configuration, 3 geometry, 4 mesh, 5 solver,
6 classification.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ChainlabError, ConfigError
from .geometry import load_config
from .pipeline import RunConfig, render, run, sweep


def _parser():
    p = argparse.ArgumentParser(prog="chainlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "spectrum, nodal counts and bound reports for one domain"),
        ("sweep", "Courant-sharp certificate over a list of neck widths"),
        ("render", "one SVG per eigenfunction"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True, help="domain description (JSON)")
        s.add_argument("--h", type=float, help="mesh size (default: config 'h' or 0.05)")
        s.add_argument("--n", type=int, help="number of eigenpairs (default: config 'n' or 40)")
        s.add_argument("--eps", type=float, default=0.1)
        s.add_argument("--beta", type=float, default=0.375)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", default="chainlab-out")
        s.add_argument("--neck-h", type=float, help="mesh size inside the necks")
        if name == "run":
            s.add_argument("--render", type=int, nargs="*", help="eigenfunction indices to draw")
            s.add_argument("--vectors", action="store_true", help="also write the eigenvector sidecar")
        if name == "sweep":
            s.add_argument("--widths", type=float, nargs="+",
                           help="strictly decreasing neck widths (default: config 'sweep_widths')")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _run_config(args):
    spec = load_config(args.config)
    extra = spec.extra
    kw = dict(
        config=spec,
        h=args.h if args.h is not None else float(extra.get("h", 0.05)),
        n=args.n if args.n is not None else int(extra.get("n", 40)),
        eps=args.eps,
        beta=args.beta,
        seed=args.seed,
        out=args.out,
        neck_h=args.neck_h,
    )
    if args.command == "run":
        if args.render is not None:
            kw["render"] = tuple(args.render)
        kw["vectors"] = args.vectors
    if args.command == "sweep":
        widths = args.widths if args.widths is not None else extra.get("sweep_widths", [])
        kw["widths"] = tuple(float(w) for w in widths)
        kw["render"] = ()
    return RunConfig(**kw)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _run_config(args)
        if args.command == "run":
            res = run(cfg)
            files = res.files
            bad = [r for r in res.reports if r.id in ("courant", "class-cover") and not r.satisfied]
            for r in bad:
                print(f"warning: {r.id} not satisfied: {r.lhs} > {r.rhs} ({r.context})", file=sys.stderr)
        elif args.command == "sweep":
            entries, cert = sweep(cfg)
            files = [f"{cfg.out}/certificate.csv", f"{cfg.out}/pleijel.csv"]
            for e in entries:
                if e.error:
                    print(f"width {e.width}: {e.error}", file=sys.stderr)
            print(f"certificate {cert.certificate} flatness {cert.flatness}")
        else:
            files = render(cfg)
    except ChainlabError as exc:
        print(f"chainlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"chainlab: {exc}", file=sys.stderr)
        return ConfigError.exit_code if isinstance(exc, FileNotFoundError) else 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
