"""
Tailwise — Command-line harness
Moment reports, single VaR/ES queries, alpha sweeps and table reproduction.

Loss specs are flat key=value tokens, the same in arguments and --config files:
  family=exponential lambda=<rate>
  family=pareto a=<shape> c=<scale>
  family=lognormal mu=<location> sigma_sq=<scale^2>
  family=compound_poisson lambda=<frequency> sev_family=lognormal sev_mu=<> sev_sigma_sq=<>
  family=compound_poisson lambda=<frequency> sev_family=exponential sev_lambda=<>
  family=compound_general freq_mean freq_var freq_skew freq_kurt sev_mean sev_var sev_skew sev_kurt
A config file may also carry option keys (alpha, alpha_min, alpha_max, grid,
methods, reference, measure, mc_n, seed, streams, k); flags override it.
"""
import argparse
import io
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

from approx import C1, DEFAULT_METHODS, ApproxMethod
from config import settings
from distributions import Lognormal, spec_from_pairs
from errors import DomainError, TailwiseError
from montecarlo import McConfig, estimate_risk
from reports import (NR_DEFAULT_K, alpha_grid, cp_convergence, estimates_csv, moments_report,
                     nr_sweep_rows, render_convergence, render_table1, render_table2, sweep_rows,
                     table1_cells, table2_report, write_sweep_csv)
from utils import configure_logging, fmt, parse_int, parse_key_values, parse_list, parse_number, read_config_file

logger = logging.getLogger("tailwise.cli")

OPTION_KEYS = {"alpha", "alpha_min", "alpha_max", "grid", "methods", "reference", "measure",
               "mc_n", "seed", "streams", "k", "lambdas"}


# ── Argument handling ───────────────────────────────────────────────────────

class Options:
    """Flags merged over config-file options over settings."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        file_pairs = read_config_file(args.config) if getattr(args, "config", None) else {}
        self.file_options = {k: v for k, v in file_pairs.items() if k in OPTION_KEYS}
        spec_pairs = {k: v for k, v in file_pairs.items() if k not in OPTION_KEYS}
        spec_pairs.update(parse_key_values(getattr(args, "spec", None) or []))
        self.spec_pairs = spec_pairs

    def raw(self, key: str) -> Optional[str]:
        value = getattr(self.args, key, None)
        if value is not None:
            return str(value)
        return self.file_options.get(key)

    def number(self, key: str, default: Optional[float] = None) -> Optional[float]:
        raw = self.raw(key)
        return default if raw is None else parse_number(raw, key)

    def integer(self, key: str, default: Optional[int] = None) -> Optional[int]:
        raw = self.raw(key)
        return default if raw is None else parse_int(raw, key)

    def choice(self, key: str, choices, default: str) -> str:
        value = (self.raw(key) or default).lower()
        if value not in choices:
            raise DomainError(f"{key} must be one of {', '.join(choices)}, got {value!r}", key=key)
        return value

    def spec(self):
        return spec_from_pairs(self.spec_pairs)

    def methods(self, default=DEFAULT_METHODS) -> List[ApproxMethod]:
        raw = self.raw("methods")
        if raw is None:
            return list(default)
        return [ApproxMethod.parse(m) for m in parse_list(raw)]

    def mc_config(self, default_n: Optional[int] = None) -> McConfig:
        return McConfig(
            sample_count=self.integer("mc_n", default_n or settings.mc_sample_count),
            seed=self.integer("seed", settings.mc_seed),
            stream_count=self.integer("streams"),
        )

    def alphas(self, default_min: float = C1):
        return alpha_grid(
            self.number("alpha_min", default_min),
            self.number("alpha_max", settings.sweep_alpha_max),
            self.integer("grid", settings.grid_points),
        )

    def alpha(self) -> float:
        alpha = self.number("alpha")
        if alpha is None:
            raise DomainError("missing --alpha", key="alpha")
        return alpha


def _check_sweep_window(opts: Options) -> None:
    alpha_min = opts.number("alpha_min", C1)
    if alpha_min < 0.95:
        raise DomainError(f"alpha_min must be at least 0.95, got {alpha_min}", key="alpha_min")


# ── Commands ────────────────────────────────────────────────────────────────

def cmd_moments(opts: Options, out) -> None:
    out.write(moments_report(opts.spec()))


def cmd_var(opts: Options, out) -> None:
    estimates_csv(opts.spec(), opts.alpha(), opts.methods(), "var", out)


def cmd_es(opts: Options, out) -> None:
    estimates_csv(opts.spec(), opts.alpha(), opts.methods(), "es", out)


def cmd_sweep(opts: Options, out) -> None:
    _check_sweep_window(opts)
    methods = opts.methods()
    reference = opts.choice("reference", ("exact", "mc"), "exact")
    cfg = opts.mc_config() if reference == "mc" else None
    rows = sweep_rows(opts.spec(), opts.alphas(), methods,
                      measure=opts.choice("measure", ("var", "es"), "var"),
                      reference=reference, cfg=cfg)
    write_sweep_csv(rows, [m.value for m in methods], out)


def cmd_nr_sweep(opts: Options, out) -> None:
    _check_sweep_window(opts)
    raw_k = opts.raw("k")
    k_list = [parse_int(k, "k") for k in parse_list(raw_k)] if raw_k else list(NR_DEFAULT_K)
    reference = opts.choice("reference", ("exact", "mc"), "mc")
    cfg = opts.mc_config(settings.nr_mc_sample_count) if reference == "mc" else None
    rows = nr_sweep_rows(opts.spec(), opts.alphas(), k_list, reference=reference, cfg=cfg)
    write_sweep_csv(rows, [f"k{k}" for k in k_list], out, widths=True)


def cmd_table1(opts: Options, out) -> None:
    alpha_max = opts.number("alpha_max", settings.table1_alpha_max)
    cells = table1_cells(alpha_max, opts.integer("grid", settings.grid_points), opts.mc_config())
    out.write(render_table1(cells, alpha_max))


def cmd_table2(opts: Options, out) -> None:
    out.write(render_table2(table2_report(opts.mc_config())))


def cmd_mc(opts: Options, out) -> None:
    alpha = opts.alpha()
    est = estimate_risk(opts.spec(), alpha, opts.mc_config())
    out.write("alpha,n,var_estimate,var_ci_low,var_ci_high,es_estimate,tail_count,sparse_tail\n")
    out.write(f"{fmt(alpha)},{est.n},{fmt(est.var_estimate)},{fmt(est.var_ci_low)},"
              f"{fmt(est.var_ci_high)},{fmt(est.es_estimate)},{est.tail_count},"
              f"{'true' if est.sparse_tail else 'false'}\n")


def cmd_cp_convergence(opts: Options, out) -> None:
    severity = spec_from_pairs(opts.spec_pairs) if opts.spec_pairs else Lognormal(3.0, 1.21)
    if not isinstance(severity, Lognormal):
        raise DomainError("cp-convergence needs a lognormal severity spec", key="family")
    raw = opts.raw("lambdas")
    lambdas = [parse_number(x, "lambdas") for x in parse_list(raw)] if raw else [4.0, 60.0, 500.0]
    alpha = opts.number("alpha", 0.995)
    out.write(render_convergence(cp_convergence(severity, lambdas, alpha, opts.mc_config()), alpha))


COMMANDS = {
    "moments": cmd_moments,
    "var": cmd_var,
    "es": cmd_es,
    "sweep": cmd_sweep,
    "nr-sweep": cmd_nr_sweep,
    "table1": cmd_table1,
    "table2": cmd_table2,
    "mc": cmd_mc,
    "cp-convergence": cmd_cp_convergence,
}


# ── Parser ──────────────────────────────────────────────────────────────────

def _add_common(p: argparse.ArgumentParser, spec: bool = True) -> None:
    if spec:
        p.add_argument("spec", nargs="*", help="loss spec as key=value tokens")
    p.add_argument("--config", help="key=value file with spec and option keys")
    p.add_argument("--out", help="write output to FILE instead of stdout")


def _add_mc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mc-n", dest="mc_n", type=int, help="Monte-Carlo sample count")
    p.add_argument("--seed", type=int, help="Monte-Carlo seed (64-bit unsigned)")
    p.add_argument("--streams", type=int, help="parallel Monte-Carlo substreams")


def _add_window(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha-min", dest="alpha_min", type=float, help="lower end (exclusive), default C1")
    p.add_argument("--alpha-max", dest="alpha_max", type=float, help="upper end (inclusive)")
    p.add_argument("--grid", type=int, help="number of levels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tailwise", description="VaR/ES approximations for heavy-tailed losses")
    parser.add_argument("--debug", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="moment summary, C1/C2 and the KurtI blow-up level")
    _add_common(p)

    for name in ("var", "es"):
        p = sub.add_parser(name, help=f"approximate {name.upper()} at one level")
        _add_common(p)
        p.add_argument("--alpha", type=float)
        p.add_argument("--methods", help="comma list of npa,cf,kurt1,kurt2,kurt3,kurt4")

    p = sub.add_parser("sweep", help="relative-error sweep over alpha")
    _add_common(p)
    _add_window(p)
    _add_mc(p)
    p.add_argument("--methods")
    p.add_argument("--reference", choices=("exact", "mc"))
    p.add_argument("--measure", choices=("var", "es"))

    p = sub.add_parser("nr-sweep", help="Newton-Raphson refined VaR sweep")
    _add_common(p)
    _add_window(p)
    _add_mc(p)
    p.add_argument("--k", help="comma list of iteration counts")
    p.add_argument("--reference", choices=("exact", "mc"))

    p = sub.add_parser("table1", help="relative-error ranges of the three reference distributions")
    _add_common(p, spec=False)
    p.add_argument("--alpha-max", dest="alpha_max", type=float)
    p.add_argument("--grid", type=int)
    _add_mc(p)

    p = sub.add_parser("table2", help="error orders for the extreme lognormal compound")
    _add_common(p, spec=False)
    _add_mc(p)

    p = sub.add_parser("mc", help="Monte-Carlo VaR/ES with confidence bounds")
    _add_common(p)
    p.add_argument("--alpha", type=float)
    _add_mc(p)

    p = sub.add_parser("cp-convergence", help="KurtI vs MC as the Poisson frequency grows")
    _add_common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambdas", help="comma list of frequencies")
    _add_mc(p)
    return parser


@contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
        return
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        yield fh


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.debug or None)
    try:
        opts = Options(args)
        buffer = io.StringIO()
        COMMANDS[args.command](opts, buffer)
        with _output(args.out) as out:
            out.write(buffer.getvalue())
    except TailwiseError as exc:
        key = getattr(exc, "key", None)
        print(f"error: {exc}" + (f" [key: {key}]" if key else ""), file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
