"""Command-line front end.

Thin client over the service handlers: every subcommand builds the same
request model the HTTP API accepts, runs it in-process by default, or
POSTs it to a running service when --server is given. Exit codes: 0 ok,
2 configuration error, 3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import urllib.error
import urllib.request

from .config import RunConfig, parse_config, write_config
from .errors import ConfigError, FitError, JmscatterError, NumericalError
from .nnfit import load_dataset
from .service import handlers, models


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.12g" % value
    return str(value)


def _write_csv(dest, header, rows):
    text = header + "\n" + "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)
    if dest is None:
        sys.stdout.write(text)
    else:
        with open(dest, "w", encoding="ascii") as fh:
            fh.write(text)


def _payload(config: RunConfig) -> models.ConfigPayload:
    return models.ConfigPayload(
        hbar_omega_mev=config.hbar_omega_mev,
        rank=config.rank,
        l=config.l,
        mass_constant=config.mass_constant,
        enforce_is=config.enforce_is,
        e_i_mev=config.e_i_mev,
        v={"v_%d_%d" % (i, j): val for i, j, val in config.entries},
        emin_mev=config.emin_mev,
        emax_mev=config.emax_mev,
        points=config.points,
    )


def _post(server: str, path: str, payload: dict) -> dict:
    data = json.dumps(payload).encode("ascii")
    request = urllib.request.Request(
        server.rstrip("/") + path, data=data,
        headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(request) as resp:
            return json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        try:
            detail = json.loads(exc.read()).get("detail", str(exc))
        except Exception:
            detail = str(exc)
        if exc.code in (400, 422):
            raise ConfigError("server rejected the request: %s" % detail) from None
        raise NumericalError("server error: %s" % detail) from None
    except urllib.error.URLError as exc:
        raise NumericalError("cannot reach server %s: %s" % (server, exc.reason)) from None


def _dispatch(args, path, request, response_model, handler):
    if args.server:
        return response_model.model_validate(_post(args.server, path, request.model_dump()))
    return handler(request)


def _load_config(args, lenient=False) -> RunConfig:
    return parse_config(args.config, lenient=lenient)


def _out_path(args, config: RunConfig):
    return args.out if args.out is not None else config.output


def cmd_phase_shifts(args) -> int:
    config = _load_config(args)
    req = models.PhaseShiftsRequest(config=_payload(config))
    resp = _dispatch(args, "/v1/phase-shifts", req,
                     models.PhaseShiftsResponse, handlers.phase_shifts)
    rows = [(r.e_lab_mev, r.e_cm_mev, r.delta_deg, r.re_s, r.im_s) for r in resp.rows]
    _write_csv(_out_path(args, config), "E_lab_MeV,E_cm_MeV,delta_deg,Re_S,Im_S", rows)
    return 0


def _parse_betas(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError("betas must be a comma-separated list of numbers") from None
    if not values:
        raise ConfigError("betas list is empty")
    return values


def cmd_beta_scan(args) -> int:
    config = _load_config(args)
    out_dir = _out_path(args, config)
    if out_dir is None:
        raise ConfigError("beta-scan writes a directory; pass --out or set output in the config")
    kwargs = {}
    if args.betas is not None:
        kwargs["betas_mev2"] = _parse_betas(args.betas)
    if args.betas_hw2 is not None:
        kwargs["betas_hw2"] = _parse_betas(args.betas_hw2)
    req = models.BetaScanRequest(config=_payload(config), **kwargs)
    resp = _dispatch(args, "/v1/beta-scan", req, models.BetaScanResponse, handlers.beta_scan)
    os.makedirs(out_dir, exist_ok=True)
    for k, curve in enumerate(resp.curves):
        _write_csv(os.path.join(out_dir, "curve_%d.csv" % k), "E_cm_MeV,delta_deg",
                   [(p.e_cm_mev, p.delta_deg) for p in curve.rows])
    _write_csv(os.path.join(out_dir, "tracks.csv"),
               "beta_MeV2,E_r_MeV,Gamma_MeV,delta_threshold_deg",
               [(t.beta_mev2, t.e_r_mev, t.gamma_mev, t.delta_threshold_deg)
                for t in resp.tracks])
    for t in resp.tracks:
        if t.e_r_mev is not None:
            print("beta = %s MeV^2: E_r = %s MeV, Gamma = %s MeV"
                  % (_fmt(t.beta_mev2), _fmt(t.e_r_mev), _fmt(t.gamma_mev)))
        else:
            print("beta = %s MeV^2: no resonance track" % _fmt(t.beta_mev2))
    print("wrote %d curve files and tracks.csv to %s" % (len(resp.curves), out_dir))
    return 0


def cmd_poles(args) -> int:
    config = _load_config(args)
    req = models.PolesRequest(config=_payload(config),
                              window_emin_mev=args.window_emin,
                              window_emax_mev=args.window_emax)
    resp = _dispatch(args, "/v1/poles", req, models.PolesResponse, handlers.poles)
    if not resp.poles:
        print("no bound states in the search window")
    for p in resp.poles:
        print("bound state: E = %s MeV, kappa = %s, rms_half = %s fm (n_max = %d)"
              % (_fmt(p.e_b_mev), _fmt(p.kappa_hw), _fmt(p.rms_half_fm), p.n_max))
    out = _out_path(args, config)
    if out is not None:
        _write_csv(out, "E_b_MeV,kappa_hw,rms_relative_fm,rms_half_fm,residual,n_max",
                   [(p.e_b_mev, p.kappa_hw, p.rms_relative_fm, p.rms_half_fm,
                     p.residual, p.n_max) for p in resp.poles])
    return 0


def cmd_isolated(args) -> int:
    config = _load_config(args)
    req = models.IsolatedRequest(config=_payload(config))
    resp = _dispatch(args, "/v1/isolated", req, models.IsolatedResponse, handlers.isolated)
    if not resp.states:
        print("no isolated states")
    for s in resp.states:
        print("isolated state: E = %s MeV [%s], |U_N| = %s, block check %s"
              % (_fmt(s.energy_mev), s.classification, _fmt(abs(s.last_component)),
                 "ok" if s.block_ok else "FAILED"))
    out = _out_path(args, config)
    if out is not None:
        _write_csv(out,
                   "energy_MeV,classification,last_component,minor_gap_MeV,degenerate,block_ok",
                   [(s.energy_mev, s.classification, s.last_component, s.minor_gap_mev,
                     s.degenerate, s.block_ok) for s in resp.states])
    return 0


def cmd_fit(args) -> int:
    config = _load_config(args)
    if not config.enforce_is:
        raise ConfigError("fit needs an enforce_is template config (pinned state energy)")
    dataset = load_dataset(args.data)
    channel = args.channel or dataset.channel
    if channel is None:
        raise ConfigError("channel not given and the dataset has no channel tag")
    out_dir = _out_path(args, config)
    if out_dir is None:
        raise ConfigError("fit writes a directory; pass --out or set output in the config")
    rows = []
    for i in range(len(dataset)):
        sigma = None if dataset.sigma_deg is None else float(dataset.sigma_deg[i])
        rows.append(models.DataRow(e_lab_mev=float(dataset.e_lab_mev[i]),
                                   delta_deg=float(dataset.delta_deg[i]),
                                   sigma_deg=sigma))
    req = models.FitRequest(
        rows=rows,
        channel=channel,
        hbar_omega_mev=config.hbar_omega_mev,
        e_i_mev=config.e_i_mev,
        mass_constant=config.mass_constant,
        bound_lo_hw=args.bound_lo,
        bound_hi_hw=args.bound_hi,
    )
    resp = _dispatch(args, "/v1/fit", req, models.FitResponse, handlers.fit)
    os.makedirs(out_dir, exist_ok=True)
    fitted = RunConfig(
        hbar_omega_mev=config.hbar_omega_mev,
        rank=2,
        l=config.l,
        mass_constant=config.mass_constant,
        enforce_is=True,
        e_i_mev=config.e_i_mev,
        entries=((1, 1, resp.v11_mev),),
        emin_mev=config.emin_mev,
        emax_mev=config.emax_mev,
        points=config.points,
    )
    write_config(fitted, os.path.join(out_dir, "fitted_config.txt"))
    _write_csv(os.path.join(out_dir, "residuals.csv"),
               "E_lab_MeV,delta_data_deg,delta_model_deg,residual_deg",
               [(r.e_lab_mev, r.delta_data_deg, r.delta_model_deg, r.residual_deg)
                for r in resp.rows])
    print("fitted v_1_1 = %s hbar-omega (%s MeV), rms residual %s deg"
          % (_fmt(resp.v11_hw), _fmt(resp.v11_mev), _fmt(resp.rms_residual_deg)))
    print("wrote fitted_config.txt and residuals.csv to %s" % out_dir)
    return 0


def cmd_verify(args) -> int:
    config = _load_config(args, lenient=True)
    req = models.VerifyRequest(config=_payload(config))
    resp = _dispatch(args, "/v1/verify", req, models.VerifyResponse, handlers.verify)
    lines = []
    for check in resp.checks:
        lines.append("%s %s: %s" % ("PASS" if check.passed else "FAIL", check.name, check.detail))
    lines.append("verification %s" % ("passed" if resp.passed else "failed"))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    out = _out_path(args, config)
    if out is not None:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    return 0 if resp.passed else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jmscatter",
        description="scattering on separable potentials in an oscillator basis")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to a key=value config file")
    common.add_argument("--out", help="output file or directory (overrides config's output key)")
    common.add_argument("--server", help="base URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase-shifts", parents=[common],
                       help="phase-shift and S-matrix table over the config's energy grid")
    p.set_defaults(func=cmd_phase_shifts)

    p = sub.add_parser("beta-scan", parents=[common],
                       help="resonance tracks and phase curves for a family of couplings")
    p.add_argument("--betas", help="comma-separated couplings in MeV^2")
    p.add_argument("--betas-hw2", help="comma-separated couplings in units of (hbar-omega)^2")
    p.set_defaults(func=cmd_beta_scan)

    p = sub.add_parser("poles", parents=[common], help="bound-state poles and radii")
    p.add_argument("--window-emin", type=float, help="search window lower edge in MeV")
    p.add_argument("--window-emax", type=float, help="search window upper edge in MeV")
    p.set_defaults(func=cmd_poles)

    p = sub.add_parser("isolated", parents=[common],
                       help="detect scattering-invisible eigenstates")
    p.set_defaults(func=cmd_isolated)

    p = sub.add_parser("fit", parents=[common],
                       help="fit the free strength of a pinned-state rank-2 potential")
    p.add_argument("--data", required=True, help="phase-shift dataset file")
    p.add_argument("--channel", help="dataset channel (default: tag in the data file)")
    p.add_argument("--bound-lo", type=float, default=-1.5,
                   help="lower search bound in hbar-omega units")
    p.add_argument("--bound-hi", type=float, default=-0.2,
                   help="upper search bound in hbar-omega units")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", parents=[common],
                       help="consistency checks against the independent momentum-space solver")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FitError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except JmscatterError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
