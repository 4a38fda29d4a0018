"""Command line front end: ``price``, ``smile``, ``bond`` and ``mc-check``.

Settings come from built-in defaults (the reference CIR configuration),
then an optional flat ``key = value`` file, then command line flags.
Exit codes: 0 success, 1 validation failure (mc-check outside its bands),
2 usage or configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import math
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .chf import GArgs, bond_price, g_function, pricing_wz
from .errors import (
    ArbitrageBoundsError,
    BranchError,
    ConvergenceError,
    DomainError,
    ImaginaryResidueError,
    PoleError,
    RatevolError,
    StripError,
    ValidationError,
)
from .mc import McConfig, mc_chf, mc_price, simulate
from .models import CirParams, JacobiParams, MarketState
from .pricing import ContourConfig, moment_strip, price_call
from .vol import SmileRequest, implied_vol, smile

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
CSV_HEADER = "L,K,price,implied_vol,status"
Z_BAND = 3.0


class ConfigError(RatevolError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Every setting of a run. ``None`` means "derive from the other fields"."""

    model: str = "cir"
    kappa: float | None = None
    theta: float | None = None
    delta: float | None = None
    gamma: float | None = None
    rho: float = 0.5
    eta: float | None = None
    t: float = 0.0
    x0: float = math.log(100.0)
    y0: float | None = None
    omega_i: float = -1.5
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    strip_policy: str = "residue"
    n_paths: int = 100_000
    steps_per_year: int = 250
    scheme: str = "full_truncation"
    seed: int = 20240601
    threads: int = 1

    def resolved(self) -> "RunConfig":
        """Fill derived defaults: CIR ``delta = 0.95 sqrt(2 kappa theta)``, ``gamma = 0.2 sqrt(theta)``, ``y0 = theta``."""
        if self.model == "cir":
            kappa = 0.5 if self.kappa is None else self.kappa
            theta = 0.05 if self.theta is None else self.theta
            delta = 0.95 * math.sqrt(2.0 * kappa * theta) if self.delta is None and kappa * theta > 0 else self.delta
            gamma = 0.2 * math.sqrt(theta) if self.gamma is None and theta > 0 else self.gamma
            y0 = theta if self.y0 is None else self.y0
            return replace(self, kappa=kappa, theta=theta, delta=delta, gamma=gamma, y0=y0, eta=None)
        if self.model == "jacobi":
            pick = lambda v, d: d if v is None else v  # noqa: E731
            return replace(
                self,
                kappa=pick(self.kappa, 0.3),
                theta=pick(self.theta, 0.8),
                delta=pick(self.delta, 0.2),
                gamma=pick(self.gamma, 0.2),
                eta=pick(self.eta, 0.05),
                y0=pick(self.y0, 0.5),
            )
        raise ConfigError(f"model must be 'cir' or 'jacobi', got {self.model!r}")

    def build_model(self):
        c = self.resolved()
        for name in ("kappa", "theta", "delta", "gamma"):
            if getattr(c, name) is None:
                raise ConfigError(f"missing parameter {name!r}")
        if c.model == "cir":
            return CirParams(kappa=c.kappa, theta=c.theta, delta=c.delta, gamma=c.gamma, rho=c.rho)
        return JacobiParams(kappa=c.kappa, theta=c.theta, delta=c.delta, gamma=c.gamma, eta=c.eta, rho=c.rho)

    def state(self) -> MarketState:
        c = self.resolved()
        return MarketState(t=c.t, x=c.x0, y=c.y0)

    def contour(self) -> ContourConfig:
        return ContourConfig(omega_i=self.omega_i, abs_tol=self.abs_tol, rel_tol=self.rel_tol,
                             strip_policy=self.strip_policy)

    def mc(self) -> McConfig:
        return McConfig(n_paths=self.n_paths, steps_per_year=self.steps_per_year, seed=self.seed,
                        scheme=self.scheme, n_threads=self.threads)

    def dump(self) -> str:
        lines = ["# ratevol run configuration"]
        for key, value in asdict(self.resolved()).items():
            if value is None:
                continue
            lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    if "float" in kind:
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
        if not math.isfinite(value):
            raise ConfigError(f"{key}: must be finite")
        return value
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in body.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if not raw:
            raise ConfigError(f"{source}:{lineno}: missing value for {key!r}")
        try:
            out[key] = _convert(key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return out


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config_text(text, source=path)


# ---------------------------------------------------------------- formatting


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{v:.12g}"


def _row(*values) -> str:
    return ",".join(_fmt(v) for v in values)


# ---------------------------------------------------------------- commands


def cmd_price(cfg: RunConfig, T: float, K: float, out) -> int:
    model, st = cfg.build_model(), cfg.state()
    price = price_call(model, st, T, K, cfg.contour())
    B = bond_price(model, st.t, st.y, T)
    F = st.spot / B
    try:
        iv = implied_vol(price / B, F, K, T - st.t)
    except (ArbitrageBoundsError, ConvergenceError):
        iv = math.nan
    out.write("T,K,price,bond,forward,implied_vol\n")
    out.write(_row(T, K, price, B, F, iv) + "\n")
    return EXIT_OK


def cmd_smile(cfg: RunConfig, T: float, L_min: float, L_max: float, n_points: int, out) -> int:
    grid = np.linspace(L_min, L_max, n_points)
    res = smile(SmileRequest(cfg.build_model(), cfg.state(), T, tuple(grid), cfg.contour()))
    out.write(CSV_HEADER + "\n")
    for p in res.points:
        out.write(_row(p.L, p.K, p.price, p.implied_vol, p.status) + "\n")
    return EXIT_NUMERICAL if res.n_failed == len(res.points) else EXIT_OK


def cmd_bond(cfg: RunConfig, maturities, out) -> int:
    model, st = cfg.build_model(), cfg.state()
    out.write("T,price\n")
    for T in maturities:
        out.write(_row(T, bond_price(model, st.t, st.y, T)) + "\n")
    return EXIT_OK


def cmd_mc_check(cfg: RunConfig, T: float, K: float, out, mc_theta: float | None = None) -> int:
    """Compare Fourier against Monte Carlo for the call, the bond and G at two sample frequencies.

    ``mc_theta`` replaces theta in the simulated leg only, which should make
    the check fail; it exists to test the harness itself.
    """
    model, st = cfg.build_model(), cfg.state()
    mc_cfg = cfg.resolved()
    if mc_theta is not None:
        mc_cfg = replace(mc_cfg, theta=mc_theta)
    ens = simulate(mc_cfg.build_model(), st, T, cfg.mc())

    # sample frequencies sit on the configured line when it is admissible
    _, p_hi = moment_strip(model)
    omega_i = cfg.omega_i if -cfg.omega_i < p_hi else -0.5
    rows = []

    fourier = price_call(model, st, T, K, cfg.contour())
    est, se = mc_price(ens, lambda x: np.maximum(np.exp(x) - K, 0.0))
    rows.append(("call", fourier, est, se))

    B = bond_price(model, st.t, st.y, T)
    est, se = mc_price(ens, lambda x: np.ones_like(x))
    rows.append(("bond", B, est, se))

    for omega_r in (0.5, 2.0):
        omega = complex(omega_r, omega_i)
        w, z = pricing_wz(omega)
        g = complex(g_function(model, GArgs(st.t, T, st.y, complex(w), complex(z), omega)))
        est, se = mc_chf(ens, omega, st.x)
        rows.append((f"G(omega={omega_r:g}{omega_i:+g}i)", g, est, se))

    ok = True
    out.write(f"mc-check model={model.name} T={_fmt(T)} K={_fmt(K)} paths={ens.n_paths} "
              f"steps={ens.n_steps} scheme={cfg.scheme} seed={cfg.seed}\n")
    out.write(f"boundary fraction {_fmt(ens.boundary_fraction)}, clipped steps {ens.clip_count}\n")
    for label, exact, est, se in rows:
        z = abs(exact - est) / se if se > 0 else (0.0 if exact == est else math.inf)
        passed = z < Z_BAND
        ok &= passed
        out.write(f"{label:<22} analytic={_fmt(exact)} mc={_fmt(est)} stderr={_fmt(se)} "
                  f"|z|={z:.2f} {'PASS' if passed else 'FAIL'}\n")
    out.write("RESULT " + ("PASS" if ok else "FAIL") + "\n")
    return EXIT_OK if ok else EXIT_VALIDATION


# ---------------------------------------------------------------- argparse


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _positive(name):
    def conv(s):
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{name} must be > 0, got {s}")
        return v
    return conv


def _common(p):
    g = p.add_argument_group("run configuration")
    g.add_argument("--model", choices=("cir", "jacobi"))
    g.add_argument("--config", help="flat key = value file; flags override it")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="write output to this path instead of stdout")
    g.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")
    for name in ("kappa", "theta", "delta", "gamma", "rho", "eta", "t", "x0", "y0", "omega-i", "abs-tol", "rel-tol"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--s0", type=_positive("s0"), help="spot price (sets x0 = log s0)")
    g.add_argument("--strip-policy", choices=("residue", "shift", "raise"))
    g.add_argument("--n-paths", type=int)
    g.add_argument("--steps-per-year", type=int)
    g.add_argument("--scheme", choices=("full_truncation", "reflection"))
    g.add_argument("--threads", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ratevol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("price", help="price one European call")
    _common(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--K", type=_positive("K"), required=True)

    p = sub.add_parser("smile", help="implied volatility against log-moneyness, as CSV")
    _common(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--L-min", type=float, default=-0.3)
    p.add_argument("--L-max", type=float, default=0.3)
    p.add_argument("--n-points", type=int, default=31)

    p = sub.add_parser("bond", help="zero-coupon bond prices")
    _common(p)
    p.add_argument("--T", type=float, nargs="+", required=True)

    p = sub.add_parser("mc-check", help="Fourier against Monte Carlo, with z-scores")
    _common(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--K", type=_positive("K"), required=True)
    p.add_argument("--mc-theta", type=float, help="theta for the simulated leg only (harness self-test)")
    return parser


def config_from_args(args) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    if getattr(args, "s0", None) is not None:
        values["x0"] = math.log(args.s0)
    cfg = RunConfig(**values)
    if cfg.model not in ("cir", "jacobi"):
        raise ConfigError(f"model must be 'cir' or 'jacobi', got {cfg.model!r}")
    return cfg


def _dispatch(args, cfg, out) -> int:
    if args.command == "price":
        return cmd_price(cfg, args.T, args.K, out)
    if args.command == "smile":
        if not args.L_min < args.L_max:
            raise ConfigError(f"--L-min ({args.L_min}) must be below --L-max ({args.L_max})")
        if args.n_points < 2:
            raise ConfigError("--n-points must be at least 2")
        return cmd_smile(cfg, args.T, args.L_min, args.L_max, args.n_points, out)
    if args.command == "bond":
        return cmd_bond(cfg, args.T, out)
    return cmd_mc_check(cfg, args.T, args.K, out, mc_theta=args.mc_theta)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        if args.dump_config:
            sys.stdout.write(cfg.dump())
            return EXIT_OK
        cfg.build_model()  # validate before any work
        buf = io.StringIO()
        code = _dispatch(args, cfg, buf)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return code
    except (ConfigError, ValidationError, DomainError) as exc:
        print(f"ratevol: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, BranchError, StripError, PoleError, ImaginaryResidueError,
            ArbitrageBoundsError, FloatingPointError) as exc:
        print(f"ratevol: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"ratevol: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    with contextlib.suppress(KeyboardInterrupt):
        sys.exit(main())
