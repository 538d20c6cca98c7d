"""Command line entry point: toeplitz-lab <command> <config> [options]."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DomainError
from ..operators import hankel_singular_values, hankel_sv_size
from ..traces import ef_constant, gf_constant, trace_f
from .config import ScenarioConfig, records_from_symbol
from .report import render_csv, render_json, render_table
from .runner import _default_contour, build_symbol, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _factor(cfg, args):
    a, pair = build_symbol(cfg)
    rec, pair_rec = pair.reconstruction_error()
    names = ("u_minus", "u_plus", "v_minus", "v_plus", "b", "c")
    if args.format == "json":
        return render_json({
            "name": cfg.name, "block_size": a.block_size,
            "reconstruction_error": [rec, pair_rec],
            "support_violation": pair.support_violation(),
            "bands": {k: getattr(pair, k).band for k in names},
            "factors": {k: records_from_symbol(getattr(pair, k), 1e-14) for k in names},
        })
    rows = []
    for k in names:
        s = getattr(pair, k)
        for idx, v in s.as_dict(1e-14).items():
            for i in range(s.block_size):
                for j in range(s.block_size):
                    rows.append([k, idx, i, j, float(v[i, j].real), float(v[i, j].imag)])
    return render_table(("factor", "k", "row", "col", "re", "im"), rows)


def _det_series(cfg, args):
    rep = run_scenario(_without_extras(cfg), workers=args.workers)
    return render_csv(rep) if args.format == "csv" else render_json(rep)


def _without_extras(cfg):
    cfg = ScenarioConfig.from_dict(cfg.to_record())
    cfg.f = None
    cfg.checks = ()
    return cfg


def _symbol_only(cfg):
    # traces and Hankel spectra do not need a canonical factorization
    a, facs = cfg.symbol.build()
    return build_symbol(cfg)[0] if facs is not None else a


def _trace_series(cfg, args):
    if cfg.f is None:
        raise ConfigError("trace-series needs an 'f' entry in the config")
    a = _symbol_only(cfg)
    contour = cfg.contour or _default_contour(a, cfg.f)
    Gf = gf_constant(a, cfg.f)
    ef = ef_constant(a, cfg.f, contour, cfg.M)
    rows = []
    for n in cfg.schedule:
        tv = trace_f(a, cfg.f, n).value
        rem = tv - (n + 1) * Gf - ef.value
        rows.append([n, tv.real, tv.imag, rem.real, rem.imag])
    if args.format == "json":
        return render_json({"name": cfg.name, "G_f": Gf, "E_f": ef.value, "E_f_nodes": ef.nodes,
                            "columns": ["n", "trace_re", "trace_im", "trace_rem_re", "trace_rem_im"],
                            "rows": rows})
    return render_table(("n", "trace_re", "trace_im", "trace_rem_re", "trace_rem_im"), rows)


def _hankel_sv(cfg, args):
    a = _symbol_only(cfg)
    if not a.is_scalar:
        raise DomainError("hankel-sv is implemented for scalar symbols")
    hi = cfg.hankel_range[1]
    s = hankel_singular_values(a, hankel_sv_size(a, hi))
    rows = [[k + 1, float(v)] for k, v in enumerate(s)]
    if args.format == "json":
        return render_json({"name": cfg.name, "singular_values": s.tolist()})
    return render_table(("k", "s_k"), rows)


def _report(cfg, args):
    rep = run_scenario(cfg, workers=args.workers)
    return render_csv(rep) if args.format == "csv" else render_json(rep)


COMMANDS = {"factor": _factor, "det-series": _det_series, "trace-series": _trace_series,
            "hankel-sv": _hankel_sv, "report": _report}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toeplitz-lab", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", help="scenario JSON file")
    p.add_argument("--workers", type=int, default=1, help="parallel workers (results do not depend on it)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output file (default: stdout)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be positive")
        cfg = ScenarioConfig.load(args.config)
        text = COMMANDS[args.command](cfg, args)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # ConfigError, DomainError and the other value-type errors
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
