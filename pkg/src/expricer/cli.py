"""Command-line interface.

Subcommands:
  price     expected-price term structure over a horizon grid -> CSV
  fspd      density extraction from an observations CSV -> CSV
  mc-check  standalone Monte Carlo estimates over the horizon grid -> CSV

Model specifications are JSON files with a "kind" field; CSV output uses
a fixed column order and 17-significant-digit floats, with the effective
numerical settings echoed as '#' header lines. Exit codes: 0 success,
2 input/schema error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from ._kernels import BACKEND
from .equity import bs_expected_call, bs_expected_put, fso_expected_price
from .errors import NumericalError, ParameterError, PricerError
from .forwardmeasure import (CDGSpec, MargrabeSpec, MertonVasicekSpec,
                             cdg_expected_bond, margrabe_expected_exchange,
                             merton_vasicek_expected_call)
from .fspd import StrikeGrid, extract_fspd_pipeline, smooth_curve_fit
from .mc.engine import (BatchConfig, HestonSpec, heston_characteristics,
                        simulate_expected_price)
from .measures import GBMSpec, HorizonSpec, binomial_expected_price
from .qtsm import QTSMSpec, qtsm3_expected_bond
from .shortrate import (A1R3Params, CIRParams, VasicekParams,
                        a1r3_expected_bond, cir_expected_bond,
                        vasicek_expected_bond)
from .transforms import expected_call_ajd

__all__ = ["main", "cmd_price", "cmd_fspd", "cmd_mc_check",
           "load_model_file", "canonical_model_json"]


class SchemaError(ParameterError):
    """Input file does not match the expected schema; names the field."""


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _get(d: dict, path: str, typ=float, default=None, required=True):
    node = d
    crumbs = path.split(".")
    for i, key in enumerate(crumbs):
        if not isinstance(node, dict) or key not in node:
            if required and default is None:
                raise SchemaError(f"missing field: {'.'.join(crumbs[:i + 1])}")
            return default
        node = node[key]
    if typ is float:
        if isinstance(node, bool) or not isinstance(node, (int, float)):
            raise SchemaError(f"field {path} must be a number, got {node!r}")
        return float(node)
    if typ is int:
        if isinstance(node, bool) or not isinstance(node, int):
            raise SchemaError(f"field {path} must be an integer, got {node!r}")
        return node
    if typ is list:
        if not isinstance(node, list):
            raise SchemaError(f"field {path} must be a list, got {node!r}")
        return node
    if typ is str:
        if not isinstance(node, str):
            raise SchemaError(f"field {path} must be a string, got {node!r}")
        return node
    return node


def load_model_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise SchemaError("model file must hold a JSON object")
    _get(spec, "kind", str)
    return spec


def canonical_model_json(spec: dict) -> str:
    """Canonical serialization; parse -> serialize is idempotent."""
    return json.dumps(spec, sort_keys=True, separators=(", ", ": "),
                      ensure_ascii=False)


# ---------------------------------------------------------------------------
# model registry: kind -> (pricer(spec, hz) -> (value, method, diagnostic),
#                          mc(spec, hz, config) -> MCEstimate | None)


def _gbm_from(spec: dict) -> GBMSpec:
    p = spec.get("params", {})
    return GBMSpec(S0=_get(spec, "params.S0"), mu=_get(spec, "params.mu"),
                   sigma=_get(spec, "params.sigma"), r=_get(spec, "params.r"))


def _vasicek_from(spec: dict) -> VasicekParams:
    return VasicekParams(alpha_r=_get(spec, "params.alpha_r"),
                         m_r=_get(spec, "params.m_r"),
                         sigma_r=_get(spec, "params.sigma_r"),
                         gamma_r=_get(spec, "params.gamma_r", default=0.0,
                                      required=False))


def _price_binomial(spec, hz, tol):
    model = _gbm_from(spec)
    res = binomial_expected_price(
        model, _get(spec, "claim.K"), hz,
        steps_per_year=_get(spec, "params.steps_per_year", default=1.0,
                            required=False),
        payoff=_get(spec, "claim.type", str, default="call", required=False))
    return res.value, "binomial", f"steps={res.diagnostics['steps']}"


def _price_bs(spec, hz, tol):
    model = _gbm_from(spec)
    kind = _get(spec, "claim.type", str, default="call", required=False)
    fn = bs_expected_call if kind == "call" else bs_expected_put
    return fn(model, _get(spec, "claim.K"), hz), "closed_form", ""


def _price_fso(spec, hz, tol):
    model = _gbm_from(spec)
    value = fso_expected_price(model, _get(spec, "claim.k"),
                               _get(spec, "claim.T0"), hz)
    return value, "closed_form", ""


def _price_vasicek(spec, hz, tol):
    value = vasicek_expected_bond(_vasicek_from(spec),
                                  _get(spec, "params.r_t"), hz)
    return value, "closed_form", ""


def _price_cir(spec, hz, tol):
    params = CIRParams(alpha_r=_get(spec, "params.alpha_r"),
                       m_r=_get(spec, "params.m_r"),
                       sigma_r=_get(spec, "params.sigma_r"),
                       gamma_r=_get(spec, "params.gamma_r", default=0.0,
                                    required=False))
    return cir_expected_bond(params, _get(spec, "params.r_t"), hz), \
        "closed_form", ""


def _price_a1r3(spec, hz, tol):
    names = ("alpha_v", "m_v", "alpha_th", "m_th", "alpha_r", "alpha_rv",
             "sigma_tv", "sigma_tr", "sigma_rv", "sigma_rt", "eta", "zeta",
             "beta_th", "delta_r")
    kwargs = {n: _get(spec, f"params.{n}") for n in names}
    for n in ("gamma_1", "gamma_2", "gamma_3"):
        kwargs[n] = _get(spec, f"params.{n}", default=0.0, required=False)
    state = _get(spec, "params.state", list)
    if len(state) != 3:
        raise SchemaError("params.state must have 3 entries (v, theta, r)")
    value = a1r3_expected_bond(A1R3Params(**kwargs), [float(x) for x in state], hz)
    return value, "ode", "closed CD legs + integrated AB"


def _price_qtsm3(spec, hz, tol):
    def vec(name):
        v = _get(spec, f"params.{name}", list)
        if len(v) != 3:
            raise SchemaError(f"params.{name} must have 3 entries")
        return np.array([float(x) for x in v])

    model = QTSMSpec(alpha=_get(spec, "params.alpha"), beta=np.zeros(3),
                     Psi=np.eye(3), mu=vec("mu"), xi=np.diag(vec("xi")),
                     Sigma=np.diag(vec("Sigma")), gamma0=vec("gamma0"),
                     gamma1=np.diag(vec("gamma1")))
    return qtsm3_expected_bond(model, vec("Y_t"), hz), "closed_form", ""


def _merton_vasicek_from(spec: dict) -> MertonVasicekSpec:
    return MertonVasicekSpec(S_t=_get(spec, "params.S_t"),
                             sigma=_get(spec, "params.sigma"),
                             gamma=_get(spec, "params.gamma"),
                             rho=_get(spec, "params.rho"),
                             rates=_vasicek_from(spec),
                             r_t=_get(spec, "params.r_t"))


def _price_merton_vasicek(spec, hz, tol):
    value = merton_vasicek_expected_call(_merton_vasicek_from(spec),
                                         _get(spec, "claim.K"), hz)
    return value, "closed_form", ""


def _margrabe_from(spec: dict) -> MargrabeSpec:
    names = ("S1_t", "S2_t", "sigma1", "sigma2", "gamma1", "gamma2",
             "rho_12", "rho_1r", "rho_2r", "r_t")
    kwargs = {n: _get(spec, f"params.{n}") for n in names}
    return MargrabeSpec(rates=_vasicek_from(spec), **kwargs)


def _price_margrabe(spec, hz, tol):
    return margrabe_expected_exchange(_margrabe_from(spec), hz), \
        "closed_form", ""


def _cdg_from(spec: dict) -> CDGSpec:
    return CDGSpec(lam=_get(spec, "params.lam"), nu=_get(spec, "params.nu"),
                   phi=_get(spec, "params.phi"),
                   sigma=_get(spec, "params.sigma"),
                   gamma_S=_get(spec, "params.gamma_S"),
                   rho=_get(spec, "params.rho"), rates=_vasicek_from(spec),
                   lnK=_get(spec, "params.lnK"),
                   omega=_get(spec, "params.omega"),
                   n_grid=_get(spec, "params.n_grid", int, default=200,
                               required=False))


def _price_cdg(spec, hz, tol):
    model = _cdg_from(spec)
    state = (_get(spec, "params.l_t"), _get(spec, "params.r_t"))
    return cdg_expected_bond(model, state, hz), "recursion", \
        f"n_grid={model.n_grid}"


def _heston_from(spec: dict) -> HestonSpec:
    names = ("S0", "v0", "mu", "r", "kappa", "theta", "sigma_v", "rho")
    kwargs = {n: _get(spec, f"params.{n}") for n in names}
    kwargs["kappa_star"] = _get(spec, "params.kappa_star", default=None,
                                required=False)
    return HestonSpec(**kwargs)


def _price_heston(spec, hz, tol):
    model = _heston_from(spec)
    chi, chi_star = heston_characteristics(model)
    value, diag = expected_call_ajd(
        chi, chi_star, [1.0, 0.0], _get(spec, "claim.K"),
        [math.log(model.S0), model.v0], hz, abs_tol=tol)
    return value, "fourier", f"nodes={diag['nodes']}"


def _mc_default(spec, hz, config):
    kind = _get(spec, "kind", str)
    if kind in ("binomial", "bs"):
        claim = {"type": _get(spec, "claim.type", str, default="call",
                              required=False), "K": _get(spec, "claim.K")}
        return simulate_expected_price(_gbm_from(spec), claim, hz, config)
    if kind == "fso":
        claim = {"type": "fso", "k": _get(spec, "claim.k"),
                 "T0": _get(spec, "claim.T0")}
        return simulate_expected_price(_gbm_from(spec), claim, hz, config)
    if kind == "vasicek_bond":
        claim = {"type": "bond", "r_t": _get(spec, "params.r_t")}
        return simulate_expected_price(_vasicek_from(spec), claim, hz, config)
    if kind == "cir_bond":
        params = CIRParams(alpha_r=_get(spec, "params.alpha_r"),
                           m_r=_get(spec, "params.m_r"),
                           sigma_r=_get(spec, "params.sigma_r"),
                           gamma_r=_get(spec, "params.gamma_r", default=0.0,
                                        required=False))
        claim = {"type": "bond", "r_t": _get(spec, "params.r_t")}
        return simulate_expected_price(params, claim, hz, config)
    if kind == "merton_vasicek_call":
        claim = {"type": "call", "K": _get(spec, "claim.K")}
        return simulate_expected_price(_merton_vasicek_from(spec), claim, hz,
                                       config)
    if kind == "margrabe":
        return simulate_expected_price(_margrabe_from(spec), {"type": "exchange"},
                                       hz, config)
    if kind == "heston_call":
        claim = {"type": "call", "K": _get(spec, "claim.K")}
        return simulate_expected_price(_heston_from(spec), claim, hz, config)
    return None


_REGISTRY = {
    "binomial": _price_binomial,
    "bs": _price_bs,
    "fso": _price_fso,
    "vasicek_bond": _price_vasicek,
    "cir_bond": _price_cir,
    "a1r3_bond": _price_a1r3,
    "qtsm3_bond": _price_qtsm3,
    "merton_vasicek_call": _price_merton_vasicek,
    "margrabe": _price_margrabe,
    "cdg_bond": _price_cdg,
    "heston_call": _price_heston,
}


def _parse_horizons(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise SchemaError(f"bad horizons list: {text!r}") from None
    if not values:
        raise SchemaError("empty horizons list")
    return values


def _write_rows(out_path: str | None, header_lines: list[str],
                columns: list[str], rows: list[list]):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    data = buf.getvalue()
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)


def _settings_header(args, extra=()):
    lines = [f"kernel_backend={BACKEND}",
             f"tolerance={_fmt(args.tolerance)}",
             f"seed={args.seed}"]
    lines.extend(extra)
    return lines


def cmd_price(args) -> int:
    spec = load_model_file(args.model)
    kind = spec["kind"]
    if kind not in _REGISTRY:
        raise SchemaError(f"unknown model kind: {kind!r}")
    pricer = _REGISTRY[kind]
    t = _get(spec, "horizon.t")
    T = _get(spec, "horizon.T")
    horizons = _parse_horizons(args.horizons)
    current, _m, _d = pricer(spec, HorizonSpec(t, t, T), args.tolerance)
    columns = ["H", "expected_price", "expected_simple_return", "method",
               "diagnostic"]
    config = None
    if args.mc_check:
        columns += ["mc_mean", "mc_se", "mc_within_3se"]
        config = BatchConfig(n_paths=args.paths, seed=args.seed,
                             steps_per_year=args.steps_per_year)
    rows = []
    for h in horizons:
        hz = HorizonSpec(t, h, T)
        value, method, diagnostic = pricer(spec, hz, args.tolerance)
        row = [h, value, value / current - 1.0, method, diagnostic]
        if args.mc_check:
            est = _mc_default(spec, hz, config)
            if est is None:
                raise SchemaError(f"no Monte Carlo sampler for kind {kind!r}")
            within = abs(est.mean - value) <= 3.0 * est.standard_error
            row += [est.mean, est.standard_error, within]
        rows.append(row)
    header = _settings_header(args, [f"model_kind={kind}",
                                     f"current_price={_fmt(current)}"])
    if args.mc_check:
        header.append(f"mc_paths={args.paths}")
    _write_rows(args.out, header, columns, rows)
    return 0


def cmd_mc_check(args) -> int:
    spec = load_model_file(args.model)
    kind = spec["kind"]
    t = _get(spec, "horizon.t")
    T = _get(spec, "horizon.T")
    config = BatchConfig(n_paths=args.paths, seed=args.seed,
                         steps_per_year=args.steps_per_year)
    rows = []
    for h in _parse_horizons(args.horizons):
        est = _mc_default(spec, HorizonSpec(t, h, T), config)
        if est is None:
            raise SchemaError(f"no Monte Carlo sampler for kind {kind!r}")
        rows.append([h, est.mean, est.standard_error, est.n_paths,
                     est.metadata.get("steps_per_year") or ""])
    header = _settings_header(args, [f"model_kind={kind}",
                                     f"mc_paths={args.paths}"])
    _write_rows(args.out, header,
                ["H", "mc_mean", "mc_se", "n_paths", "steps_per_year"], rows)
    return 0


def _read_observations(path: str):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(row for row in fh if not row.startswith("#"))
            required = {"strike", "current_price", "expected_price"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise SchemaError(
                    "observations CSV needs columns strike, current_price, "
                    "expected_price")
            rows = [(float(r["strike"]), float(r["current_price"]),
                     float(r["expected_price"])) for r in reader]
    except FileNotFoundError:
        raise SchemaError(f"observations file not found: {path}") from None
    except ValueError as exc:
        raise SchemaError(f"bad numeric value in observations: {exc}") from None
    if not rows:
        raise SchemaError("observations CSV is empty")
    rows.sort(key=lambda r: r[0])
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def cmd_fspd(args) -> int:
    spec = load_model_file(args.model)
    if spec["kind"] != "fspd_study":
        raise SchemaError("fspd needs a model file with kind 'fspd_study'")
    s_t = _get(spec, "params.S_t")
    r = _get(spec, "params.r")
    hz = HorizonSpec(_get(spec, "horizon.t"), _get(spec, "horizon.H"),
                     _get(spec, "horizon.T"))
    strikes, current, expected = _read_observations(args.observations)
    grid = StrikeGrid(np.linspace(strikes[0], strikes[-1], args.grid_n))

    if args.penalty_sweep:
        rows = []
        for pen in np.logspace(-8, 4, 13):
            iv_obs = np.column_stack([
                strikes,
                [float(x) for x in _implied_vols(current, s_t, strikes, hz, r)]])
            curve = smooth_curve_fit(iv_obs, grid, float(pen))
            rough = float(np.sum(np.diff(curve, 2) ** 2))
            rows.append([float(pen), rough])
        _write_rows(args.out, _settings_header(args, ["sweep=smoothness"]),
                    ["penalty", "roughness"], rows)
        return 0

    result = extract_fspd_pipeline(s_t, r, hz, strikes, current, expected,
                                   grid, smoothness=args.smoothness)
    header = _settings_header(args, [
        f"normalizer={_fmt(result.normalizer)}",
        f"integral={_fmt(result.integral())}",
        f"tail_mass={_fmt(result.tail_mass())}",
        f"smoothness={_fmt(args.smoothness)}",
    ])
    rows = [[k, g] for k, g in zip(result.strikes, result.density)]
    _write_rows(args.out, header, ["strike", "density"], rows)
    return 0


def _implied_vols(prices, s_t, strikes, hz, r):
    from .fspd import implied_vol_invert
    return [implied_vol_invert(c, s_t, k, hz.t, hz.T, r)
            for c, k in zip(prices, strikes)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expricer",
        description="Expected future prices of contingent claims")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model", required=True, help="JSON model file")
        p.add_argument("--out", default=None, help="output CSV (default stdout)")
        p.add_argument("--seed", type=int, default=12345)
        p.add_argument("--paths", type=int, default=100_000)
        p.add_argument("--steps-per-year", type=int, default=500)
        p.add_argument("--tolerance", type=float, default=1e-8)

    p_price = sub.add_parser("price", help="expected-price term structure")
    common(p_price)
    p_price.add_argument("--horizons", required=True,
                         help="comma-separated horizon dates")
    p_price.add_argument("--mc-check", action="store_true",
                         help="append Monte Carlo columns")

    p_mc = sub.add_parser("mc-check", help="Monte Carlo estimates only")
    common(p_mc)
    p_mc.add_argument("--horizons", required=True)

    p_fspd = sub.add_parser("fspd", help="density extraction")
    common(p_fspd)
    p_fspd.add_argument("--observations", required=True,
                        help="CSV with strike, current_price, expected_price")
    p_fspd.add_argument("--smoothness", type=float, default=1e-4)
    p_fspd.add_argument("--grid-n", type=int, default=121)
    p_fspd.add_argument("--penalty-sweep", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"price": cmd_price, "mc-check": cmd_mc_check,
                "fspd": cmd_fspd}
    try:
        return handlers[args.command](args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except PricerError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
