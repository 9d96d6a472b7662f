"""Command-line entry point.

Subcommands: generate, evaluate, diameter, sweep, cascade, figure. Flags
override config-file values; every run prints its fully resolved config to
stderr; data goes to stdout or to --out. Exit codes: 0 success, 1 usage error,
2 runtime flag (cascade/sweep hit the round cap without terminating).

The numba thread count is fixed per process; --threads is exported to the
environment before the compiled engine is first imported, so it works both as
a cap and (on small machines) as an oversubscription request. Outputs are
independent of the thread count.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

KIND_ALIASES = {"stochastic-fixed": "stochastic-fixed-degree"}

OUT_ENV = "SWTORUS_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--size", type=int, metavar="L", help="lattice side length")
    common.add_argument("--kind", choices=["torus", "stochastic", "stochastic-fixed",
                                           "stochastic-fixed-degree", "ibt"])
    common.add_argument("--alpha", type=float, help="distance exponent for stochastic kinds")
    common.add_argument("--s1", type=int, help="first iBT bypass length")
    common.add_argument("--s2", type=int, help="second iBT bypass length")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--config", metavar="FILE", help="config file (flags override it)")
    common.add_argument("--out", metavar="PATH",
                        help=f"output file/directory (default dir: ${OUT_ENV})")
    common.add_argument("--messages", metavar="SPEC",
                        help="message set: all-pairs or sample:M")
    common.add_argument("--level", type=int, choices=[1, 2], help="navigation level")
    common.add_argument("--threads", type=int, help="worker threads for evaluation")
    common.add_argument("--sample-index", type=int, default=0,
                        help="which candidate network to build (generate/evaluate/cascade)")

    parser = _Parser(prog="swtorus", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("generate", parents=[common],
                   help="generate a network and serialize it")

    p_eval = sub.add_parser("evaluate", parents=[common],
                            help="route a message set and report metrics")
    p_eval.add_argument("--net", metavar="FILE", help="load a serialized network")
    p_eval.add_argument("--hop-limit", type=int,
                        help="override the default 2 * navigation diameter")
    p_eval.add_argument("--histogram", metavar="FILE", help="write the load histogram CSV")
    p_eval.add_argument("--bin-width", type=int, default=1)

    p_diam = sub.add_parser("diameter", parents=[common],
                            help="navigation diameter of the intact network")
    p_diam.add_argument("--net", metavar="FILE")

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="failure sweep over b values on the best sample")
    _sweep_flags(p_sweep)

    p_casc = sub.add_parser("cascade", parents=[common],
                            help="run one cascading-failure experiment")
    p_casc.add_argument("--b", type=int, required=True, help="initially failed node count")
    p_casc.add_argument("--k", type=float, help="assurance factor (f_th = k * iBT f_max)")
    p_casc.add_argument("--f-th", type=int, help="explicit load threshold")
    p_casc.add_argument("--rep", type=int, default=0, help="failure draw index")
    p_casc.add_argument("--max-rounds", type=int)

    p_fig = sub.add_parser("figure", parents=[common],
                           help="emit the CSV series behind one figure")
    p_fig.add_argument("figure", type=int, choices=[1, 2, 3, 4, 5])
    _sweep_flags(p_fig)
    return parser


def _sweep_flags(p):
    p.add_argument("--samples", type=int, help="candidate networks for selection")
    p.add_argument("--reps", type=int, help="failure draws per b value")
    p.add_argument("--b-values", metavar="LIST", help="comma-separated failed-node counts")
    p.add_argument("--fractions", metavar="LIST", help="comma-separated failed fractions")
    p.add_argument("--k", type=float, help="assurance factor enabling cascades")


def _resolve_config(args):
    from .harness import ExperimentConfig
    config = (ExperimentConfig.from_file(args.config) if args.config
              else ExperimentConfig())
    kw = {}
    if args.size is not None:
        kw["L"] = args.size
    if args.kind is not None:
        kw["kind"] = KIND_ALIASES.get(args.kind, args.kind)
    if args.alpha is not None:
        kw["alpha"] = args.alpha
    if args.s1 is not None:
        kw["s1"] = args.s1
    if args.s2 is not None:
        kw["s2"] = args.s2
    if args.seed is not None:
        kw["master_seed"] = args.seed
    if args.messages is not None:
        kw["messages"] = args.messages
    if args.level is not None:
        kw["level"] = args.level
    if getattr(args, "samples", None) is not None:
        kw["n_samples"] = args.samples
    if getattr(args, "reps", None) is not None:
        kw["n_repetitions"] = args.reps
    if getattr(args, "b_values", None) is not None:
        kw["b_values"] = tuple(int(v) for v in args.b_values.split(","))
    if getattr(args, "fractions", None) is not None:
        kw["b_fractions"] = tuple(float(v) for v in args.fractions.split(","))
    if getattr(args, "k", None) is not None:
        kw["cascade_k"] = args.k
    return replace(config, **kw) if kw else config


def _print_config(config):
    for line in config.to_text().splitlines():
        print(line if line.startswith("#") else f"# {line}", file=sys.stderr)


def _out_dir(args) -> str:
    return args.out or os.environ.get(OUT_ENV) or "."


def _load_or_build(args, config):
    from .harness import build_network
    from .topology import load_network
    if getattr(args, "net", None):
        return load_network(args.net)
    return build_network(config, sample_index=args.sample_index)


def _intact(net):
    import numpy as np
    if net.alive.all():
        return net
    return replace(net, alive=np.ones(net.config.N, dtype=bool))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None:
        # must precede the first numba import in this process
        os.environ.setdefault("NUMBA_NUM_THREADS", str(max(1, args.threads)))
    try:
        config = _resolve_config(args)
    except (ValueError, OSError) as exc:
        print(f"swtorus: error: {exc}", file=sys.stderr)
        return 1
    from . import engine
    if args.threads is not None:
        engine.use_threads(args.threads)
    _print_config(config)
    try:
        return _COMMANDS[args.command](args, config)
    except (ValueError, OSError) as exc:  # bad parameter combos / unreadable paths
        print(f"swtorus: error: {exc}", file=sys.stderr)
        return 1


def _cmd_generate(args, config) -> int:
    from .harness import build_network
    from .topology import network_to_text
    text = network_to_text(build_network(config, sample_index=args.sample_index))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"# wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_evaluate(args, config) -> int:
    from . import engine
    from . import seeds
    from .metrics import (build_message_set, evaluate, global_average_distance,
                          histogram_csv, load_histogram, report_csv)
    from .routing import NavigationPolicy
    net = _load_or_build(args, config)
    d2 = engine.navigation_diameter(_intact(net), level=2)
    hop_limit = args.hop_limit if args.hop_limit else 2 * d2
    mode, m = config.message_mode()
    m_eff = None if m is None else min(m, net.n_alive * (net.n_alive - 1))
    msgs = build_message_set(net, mode, m=m_eff,
                             seed=seeds.derive_seed(config.master_seed, seeds.MESSAGES))
    report, loads = evaluate(net, msgs, NavigationPolicy(config.level, hop_limit))
    report.d, report.connected = global_average_distance(net)
    report.nav_diameter = d2
    text = report_csv(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    if args.histogram:
        lo, hi, counts = load_histogram(loads, args.bin_width)
        with open(args.histogram, "w") as fh:
            fh.write(histogram_csv(lo, hi, counts))
        print(f"# wrote {args.histogram}", file=sys.stderr)
    return 0


def _cmd_diameter(args, config) -> int:
    from . import engine
    net = _load_or_build(args, config)
    d = engine.navigation_diameter(net, level=config.level)
    sys.stdout.write(f"level,diameter\n{config.level},{d}\n")
    return 0


def _cmd_sweep(args, config) -> int:
    from .harness import select_best_sample, sweep, sweep_csv, write_manifest
    sel = select_best_sample(config)
    l2_txt = "NA" if sel.report.l2 is None else f"{sel.report.l2:.6g}"
    print(f"# selected sample {sel.index} (l2={l2_txt} "
          f"f_max={sel.report.f_max})", file=sys.stderr)
    swp = sweep(config, sel.network)
    text = sweep_csv(swp)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "sweep.csv")
        with open(path, "w") as fh:
            fh.write(text)
        write_manifest(args.out, config, [path])
        print(f"# wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0 if swp.all_terminated else 2


def _cmd_cascade(args, config) -> int:
    from . import engine
    from .failure import CascadeParams, FailureScenario, cascade_trace_csv, run_cascade
    from . import seeds
    from .harness import build_network, ibt_reference_f_max
    from .routing import NavigationPolicy
    net = build_network(config, sample_index=args.sample_index)
    d2 = engine.navigation_diameter(net, level=2)
    policy = NavigationPolicy(config.level, 2 * d2)
    if args.f_th is not None:
        params = CascadeParams(f_th=args.f_th, max_rounds=args.max_rounds)
    else:
        k = args.k if args.k is not None else (config.cascade_k or 3.0)
        f_ref = ibt_reference_f_max(config)
        params = CascadeParams.from_assurance(k, f_ref, max_rounds=args.max_rounds)
        print(f"# f_th = {params.f_th} (k={k}, f_max_ref={f_ref})", file=sys.stderr)
    mode, m = config.message_mode()
    scen = FailureScenario(
        args.b, seeds.derive_seed(config.master_seed, seeds.FAILURE, 0, args.rep))
    casc = run_cascade(net, scen, params, policy, message_mode=mode, m=m,
                       message_seed=seeds.derive_seed(config.master_seed,
                                                      seeds.MESSAGES, 0, args.rep))
    text = cascade_trace_csv(casc, net.config.N)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"# wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0 if casc.terminated else 2


def _cmd_figure(args, config) -> int:
    from .harness import reproduce_figure
    paths = reproduce_figure(config, args.figure, _out_dir(args))
    for p in paths:
        print(f"# wrote {p}", file=sys.stderr)
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "evaluate": _cmd_evaluate,
    "diameter": _cmd_diameter,
    "sweep": _cmd_sweep,
    "cascade": _cmd_cascade,
    "figure": _cmd_figure,
}


if __name__ == "__main__":
    sys.exit(main())
