"""Command-line harness: ``passive-isp <subcommand> --config run.ini --out DIR``.

Configuration is an INI file whose sections and keys are listed in
:data:`DEFAULTS`; anything else is rejected.  Exit codes: 0 success (including
reported findings such as ``EPS_TOO_LARGE``), 2 configuration or validation
error, 3 solver failure, 4 missing ``--mu-target`` in blind mode.
"""

import argparse
import configparser
import io as _io
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as pio
from .continuation import (
    harmonic_measure_converged,
    n_h_for_margin,
    resonance_scan,
    sample_F_on_strip,
    strip_grid,
    strip_half_width,
    strip_margin,
    two_constants_check,
)
from .exceptions import PassiveISPError, ValidationError
from .forward import NoiseSpec, hk_sides, solve_helmholtz, synthesize_passive
from .model import load_profile, validate_medium, validate_source, write_profile
from .reconstruct import (
    assemble_source,
    coefficients_from_records,
    inner_product_coefficients,
    measurement_frequencies,
    relative_l2_error,
    truncation_level,
)
from .spectral import RESOLUTION_GUARD, eigenvalue_bounds, neumann_eigensystem
from .stability import (
    certify_theorem1,
    certify_theorem2,
    eta_exponent,
    source_frequency,
    spectral_norm,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BLIND = 0, 2, 3, 4

DEFAULTS = {
    "run": {"seed": "0", "out": "out"},
    "grid": {"n_cells": "1024"},
    "medium": {"profile": "zero", "n0": "0.5", "M": "10000", "m": "1", "check_support": "true"},
    "source": {"profile": "bump(0.2,0.8,1.0)", "L": "10000", "check_support": "true"},
    "noise": {"kind": "none", "level": "0"},
    "forward": {"ks": "0.5,1,2", "k_field": "1.5707963267948966", "max_im_k": "4"},
    "spectrum": {"mu_max": "20", "vectors": "false"},
    "reconstruct": {
        "data": "",
        "mu_target": "",
        "zero_mode": "true",
        "zero_mode_ks": "0.01,0.005,0.0025",
        "noise_levels": "",
    },
    "certify": {
        "K": "2",
        "C0": "1",
        "n_h": "0",
        "k_check": "3,5,9",
        "slack": "0.01",
        "im_depth_max": "2",
        "n_re": "300",
        "n_im": "9",
        "n_data": "400",
    },
    "resonances": {
        "re_min": "0.5",
        "re_max": "20",
        "im_min": "-1",
        "im_max": "-0.01",
        "locate": "true",
        "margin": "false",
        "im_depth_max": "2",
    },
    "harmonic": {"K": "1", "n_h": "1", "X_max": "", "grid_res": "8", "tol": "1e-3", "ks": "1.5,2,3",
                 "convention": "section"},
    "hk": {"ks": "0.5,1,2,5,10", "pairs": "5"},
}


class MissingMuTarget(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


class Config:
    """Validated, defaulted view of an INI configuration."""

    def __init__(self, parser):
        self._p = parser

    @classmethod
    def load(cls, path=None, overrides=None):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_dict(DEFAULTS)
        if path is not None:
            user = configparser.ConfigParser(interpolation=None)
            user.optionxform = str
            try:
                with open(path) as fh:
                    user.read_file(fh)
            except OSError as err:
                raise ValidationError("BAD_CONFIG", f"cannot read {path}: {err}") from None
            except configparser.Error as err:
                raise ValidationError("BAD_CONFIG", str(err)) from None
            for section in user.sections():
                if section not in DEFAULTS:
                    raise ValidationError("BAD_CONFIG", f"unknown section [{section}]")
                for key, value in user.items(section):
                    if key not in DEFAULTS[section]:
                        raise ValidationError("BAD_CONFIG", f"unknown key {key!r} in [{section}]")
                    parser.set(section, key, value)
        for (section, key), value in (overrides or {}).items():
            parser.set(section, key, str(value))
        return cls(parser)

    def text(self, *, with_out=True):
        """Effective configuration as INI; ``with_out=False`` drops the output location."""
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_dict(self._p)
        if not with_out:
            parser.remove_option("run", "out")
        buf = _io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def hash(self):
        # where results go does not change what they are
        return pio.config_hash(self.text(with_out=False))

    def str(self, section, key):
        return self._p.get(section, key).strip()

    def float(self, section, key):
        try:
            return self._p.getfloat(section, key)
        except ValueError:
            raise ValidationError("BAD_CONFIG", f"[{section}] {key} must be a number") from None

    def opt_float(self, section, key):
        return self.float(section, key) if self.str(section, key) else None

    def int(self, section, key):
        try:
            return self._p.getint(section, key)
        except ValueError:
            raise ValidationError("BAD_CONFIG", f"[{section}] {key} must be an integer") from None

    def bool(self, section, key):
        try:
            return self._p.getboolean(section, key)
        except ValueError:
            raise ValidationError("BAD_CONFIG", f"[{section}] {key} must be true or false") from None

    def floats(self, section, key):
        raw = self.str(section, key)
        try:
            return [float(v) for v in raw.split(",") if v.strip()]
        except ValueError:
            raise ValidationError("BAD_CONFIG", f"[{section}] {key} must be a comma-separated list") from None


def _medium(cfg):
    n = cfg.int("grid", "n_cells")
    q = load_profile(cfg.str("medium", "profile"), n, "q")
    return validate_medium(q, cfg.float("medium", "n0"), cfg.float("medium", "M"), cfg.int("medium", "m"),
                           check_support=cfg.bool("medium", "check_support"))


def _source(cfg):
    n = cfg.int("grid", "n_cells")
    f = load_profile(cfg.str("source", "profile"), n, "f")
    return validate_source(f, cfg.float("source", "L"), check_support=cfg.bool("source", "check_support"))


def _noise(cfg, level=None):
    kind = cfg.str("noise", "kind")
    level = cfg.float("noise", "level") if level is None else level
    if level > 0 and kind == "none":
        kind = "additive_gaussian"
    return NoiseSpec(kind, level, cfg.int("run", "seed"))


def _full_eigensystem(medium):
    return neumann_eigensystem(medium, RESOLUTION_GUARD * medium.grid.n_cells)


class _Writer:
    def __init__(self, cfg, out):
        self.cfg, self.out, self.hash = cfg, Path(out), cfg.hash()
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "config.ini").write_text(cfg.text(with_out=False))

    def json(self, name, payload, grid=None, **meta):
        return pio.write_json(self.out / name, payload, version=__version__, cfg_hash=self.hash,
                              grid=grid, extra_meta=meta)

    def path(self, name):
        return self.out / name


# ---------------------------------------------------------------------------
# subcommands


def cmd_forward(cfg, out):
    medium, source = _medium(cfg), _source(cfg)
    w = _Writer(cfg, out)
    k_field = cfg.float("forward", "k_field")
    field = solve_helmholtz(medium, source, k_field, max_im_k=cfg.float("forward", "max_im_k"))
    pio.write_field_csv(w.path("field.csv"), field)
    records = synthesize_passive(medium, source, cfg.floats("forward", "ks"), noise=_noise(cfg))
    pio.write_passive_csv(w.path("passive.csv"), records)
    w.json("forward.json", {"k_field": k_field, "fd_residual": field.residual, "n_records": len(records)},
           grid=medium.grid)
    return EXIT_OK


def cmd_spectrum(cfg, out):
    medium = _medium(cfg)
    w = _Writer(cfg, out)
    es = neumann_eigensystem(medium, cfg.float("spectrum", "mu_max"))
    pio.write_eigensystem_csv(w.path("eigensystem.csv"), es)
    if cfg.bool("spectrum", "vectors"):
        pio.write_eigenvectors(w.path("eigenvectors.csv"), es)
    bounds = [eigenvalue_bounds(medium, p.j) for p in es.pairs]
    w.json("spectrum.json", {
        "mu": es.mus, "sturm_count": es.sturm_count, "mu_max": es.mu_max_resolved,
        "bounds": bounds, "residuals": [p.residual for p in es.pairs],
    }, grid=medium.grid)
    return EXIT_OK


def _reconstruct_once(es, medium, records, J, zero_mode, strict=True):
    coeffs = coefficients_from_records(es, records, J, zero_mode=zero_mode, strict=strict)
    return coeffs, assemble_source(coeffs, es, medium)


def cmd_reconstruct(cfg, out):
    medium = _medium(cfg)
    es = _full_eigensystem(medium)
    data_path = cfg.str("reconstruct", "data")
    mu_target = cfg.opt_float("reconstruct", "mu_target")
    zero_mode = cfg.bool("reconstruct", "zero_mode")
    zk = tuple(cfg.floats("reconstruct", "zero_mode_ks")) if zero_mode else ()
    source = None
    if data_path:
        if mu_target is None:
            raise MissingMuTarget("blind reconstruction needs --mu-target")
        records = pio.read_passive_csv(data_path)
    else:
        source = _source(cfg)
        if mu_target is None:
            mu_target = math.sqrt(2.0) * source_frequency(source, medium, es)[1]
    J = truncation_level(es, mu_target)
    if source is not None:
        ks = measurement_frequencies(es, J, zk)
        records = synthesize_passive(medium, source, ks, noise=_noise(cfg))
    w = _Writer(cfg, out)
    # measured or noisy data: do not demand monotone zero-mode corrections
    strict = not data_path and cfg.float("noise", "level") == 0
    coeffs, f_hat = _reconstruct_once(es, medium, records, J, zero_mode, strict)
    pio.write_passive_csv(w.path("passive.csv"), records)
    pio.write_coefficients_csv(w.path("coefficients.csv"), coeffs, es)
    write_profile(w.path("source_hat.txt"), f_hat, "f")
    metrics = {"mode": "blind" if data_path else "synthetic", "mu_target": mu_target, "truncation": J}
    if source is not None:
        oracle = inner_product_coefficients(source.f_values, es, J).as_dict()
        metrics["rel_l2"] = relative_l2_error(f_hat, source.f_values, medium.grid)
        metrics["h_minus_1"] = spectral_norm(f_hat - source.f_values, es, -1)
        metrics["per_mode"] = [
            {"j": j, "f_j": fj, "oracle": oracle[j], "abs_err": abs(fj - oracle[j])}
            for j, fj in coeffs.coeffs
        ]
        levels = cfg.floats("reconstruct", "noise_levels")
        if levels:
            rows = []
            clean = _reconstruct_once(es, medium, synthesize_passive(medium, source, ks), J, zero_mode)[1]
            for eps in levels:
                recs = synthesize_passive(medium, source, ks, noise=_noise(cfg, eps))
                f_eps = _reconstruct_once(es, medium, recs, J, zero_mode, eps == 0)[1]
                rows.append((eps, relative_l2_error(f_eps, source.f_values, medium.grid),
                             math.sqrt(medium.grid.integrate((f_eps - clean) ** 2)),
                             spectral_norm(f_eps - source.f_values, es, -1)))
            pio.write_csv(w.path("noise_sweep.csv"), ("eps", "rel_l2", "l2_perturbation", "h_minus_1"), rows)
    w.json("metrics.json", metrics, grid=medium.grid)
    return EXIT_OK


def _strip_n_h(cfg, medium, re_max):
    n_h = cfg.int("certify", "n_h")
    if n_h > 0:
        return n_h, None
    depth = cfg.float("certify", "im_depth_max")
    margin = strip_margin(medium, (0.5, re_max), depth)
    return n_h_for_margin(margin), margin


def cmd_certify(cfg, out):
    medium, source = _medium(cfg), _source(cfg)
    es = _full_eigensystem(medium)
    K, C0 = cfg.float("certify", "K"), cfg.float("certify", "C0")
    k_check = cfg.floats("certify", "k_check")
    mu_f, mu_tilde = source_frequency(source, medium, es)
    band = math.sqrt(2.0) * mu_tilde
    top = max(band, K)
    dense = np.linspace(top / cfg.int("certify", "n_data"), top, cfg.int("certify", "n_data"))
    eig = [p.mu for p in es.pairs if 0 < p.mu <= top]
    passive = synthesize_passive(medium, source, np.unique(np.concatenate([dense, eig])), noise=_noise(cfg))

    w = _Writer(cfg, out)
    report1 = certify_theorem1(source, medium, es, passive, C0=C0)
    rc = "resonances"
    rect = (cfg.float(rc, "re_min"), cfg.float(rc, "re_max"), cfg.float(rc, "im_min"), cfg.float(rc, "im_max"))
    scan = resonance_scan(medium, rect, locate=cfg.bool(rc, "locate"))
    w.json("resonances.json", scan.to_dict(), grid=medium.grid)

    strip_info, rows, table = None, [], []
    if K < band:
        k_check = [k for k in k_check if k > K]
        hm_re_max = max(k_check + [3.0 * max(K, 1.0)])
        n_h, margin = _strip_n_h(cfg, medium, hm_re_max + 10.0)
        field, w0s, history = harmonic_measure_converged(K, n_h, k_check)
        h = strip_half_width(n_h)
        grid = strip_grid(float(field.x[-1]), h, n_re=cfg.int("certify", "n_re"),
                          n_im=cfg.int("certify", "n_im"), extra=k_check)
        strip = sample_F_on_strip(medium, source, grid)
        report2 = certify_theorem2(source, medium, es, passive, K, C0=C0, strip=strip, w_field=field, n_h=n_h)
        for k, w0 in zip(k_check, w0s):
            lhs, rhs, ok = two_constants_check(strip, field, K, k, slack=cfg.float("certify", "slack"), w0=w0)
            bound = eta_exponent(k, K, n_h)
            rows.append((k, w0, bound, lhs, rhs, ok))
            table.append({"k": k, "w0": w0, "eta_bound": bound, "lhs": lhs, "rhs": rhs, "holds": ok})
        report2.two_constants = table
        pio.write_strip_csv(w.path("strip.csv"), strip)
        pio.write_harmonic_measure_csv(w.path("harmonic_measure.csv"), field)
        w.json("harmonic_measure.json", {"field": field.metadata(), "ks": k_check, "w0": w0s,
                                         "refinements": [r for r, _, _ in history]})
        strip_info = {"n_h": n_h, "h": h, "margin": margin, "M_f": strip.M_f_estimate}
    else:
        # the short band already covers the source frequency: nothing to continue
        report2 = certify_theorem2(source, medium, es, passive, K, C0=C0)
    pio.write_csv(w.path("two_constants.csv"), ("k", "w0", "eta_bound", "lhs", "rhs", "holds"), rows)
    w.json("stability.json", {"theorem1": report1.to_dict(), "theorem2": report2.to_dict(),
                              "strip": strip_info}, grid=medium.grid)
    return EXIT_OK


def cmd_resonances(cfg, out):
    medium = _medium(cfg)
    rc = "resonances"
    rect = (cfg.float(rc, "re_min"), cfg.float(rc, "re_max"), cfg.float(rc, "im_min"), cfg.float(rc, "im_max"))
    scan = resonance_scan(medium, rect, locate=cfg.bool(rc, "locate"))
    payload = scan.to_dict()
    if cfg.bool(rc, "margin"):
        h_star = strip_margin(medium, (rect[0], rect[1]), cfg.float(rc, "im_depth_max"))
        payload["margin"] = {"h_star": h_star, "n_h": n_h_for_margin(h_star)}
    _Writer(cfg, out).json("resonances.json", payload, grid=medium.grid)
    return EXIT_OK


def cmd_harmonic_measure(cfg, out):
    hc = "harmonic"
    K, n_h = cfg.float(hc, "K"), cfg.int(hc, "n_h")
    ks = cfg.floats(hc, "ks")
    field, w0s, history = harmonic_measure_converged(
        K, n_h, ks, X_max=cfg.opt_float(hc, "X_max"), grid_res=cfg.int(hc, "grid_res"),
        tol=cfg.float(hc, "tol"), convention=cfg.str(hc, "convention"))
    w = _Writer(cfg, out)
    pio.write_harmonic_measure_csv(w.path("harmonic_measure.csv"), field)
    bounds = [eta_exponent(k, K, n_h) for k in ks]
    w.json("harmonic_measure.json", {
        "field": field.metadata(), "ks": ks, "w0": w0s, "eta_bound": bounds,
        "dominates": [bool(a >= b - 2e-3) for a, b in zip(w0s, bounds)],
        "refinements": [{"grid_res": r, "raw": raw, "extrapolated": ext} for r, raw, ext in history],
    })
    return EXIT_OK


def cmd_hk_check(cfg, out):
    medium = _medium(cfg)
    rng = np.random.default_rng(cfg.int("run", "seed"))
    free = not np.any(medium.q_values)
    rows, worst = [], 0.0
    for k in cfg.floats("hk", "ks"):
        for x, y in rng.uniform(0.05, 0.95, size=(cfg.int("hk", "pairs"), 2)):
            lhs, rhs = hk_sides(medium, k, x, y)
            rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
            worst = max(worst, rel)
            xs, ys = medium.grid.nearest_node(x) * medium.grid.spacing, medium.grid.nearest_node(y) * medium.grid.spacing
            closed = math.cos(k * (xs - ys)) / (2 * k) if free else float("nan")
            rows.append((k, xs, ys, lhs.real, lhs.imag, rhs, abs(lhs - rhs), rel, closed))
    w = _Writer(cfg, out)
    pio.write_csv(w.path("hk.csv"), ("k", "x", "y", "re_lhs", "im_lhs", "rhs", "residual", "relative",
                                     "closed_form"), rows)
    w.json("hk.json", {"max_relative_residual": worst, "n_checks": len(rows)}, grid=medium.grid)
    return EXIT_OK


COMMANDS = {
    "forward": cmd_forward,
    "spectrum": cmd_spectrum,
    "reconstruct": cmd_reconstruct,
    "certify": cmd_certify,
    "resonances": cmd_resonances,
    "harmonic-measure": cmd_harmonic_measure,
    "hk-check": cmd_hk_check,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [run] out)")
    common.add_argument("--seed", type=int, metavar="N", help="noise and sampling seed")
    common.add_argument("--mu-target", type=float, metavar="X", help="truncation frequency for blind mode")
    common.add_argument("--grid", type=int, metavar="N", help="number of grid cells")
    common.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")
    parser = argparse.ArgumentParser(prog="passive-isp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_CONFIG if err.code else EXIT_OK
    overrides = {}
    if args.out is not None:
        overrides[("run", "out")] = args.out
    if args.seed is not None:
        overrides[("run", "seed")] = args.seed
    if args.mu_target is not None:
        overrides[("reconstruct", "mu_target")] = repr(args.mu_target)
    if args.grid is not None:
        overrides[("grid", "n_cells")] = args.grid
    try:
        cfg = Config.load(args.config, overrides)
        if args.dump_config:
            sys.stdout.write(cfg.text())
            return EXIT_OK
        return COMMANDS[args.command](cfg, cfg.str("run", "out"))
    except MissingMuTarget as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BLIND
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except PassiveISPError as err:
        k = getattr(err, "k", None)
        where = f" (k = {k})" if k is not None and f"{k}" not in str(err) else ""
        print(f"error: {err}{where}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
