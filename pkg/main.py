import functools
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Literal, TypeVar

import click
import numpy as np

from klt import logger
from klt.bounds import (
    chen_comparison,
    choose_params,
    compare_bounds,
    theorem1_bound,
)
from klt.config import RunConfig, load_config
from klt.csv import export_to_csv
from klt.errors import (
    ConfigError,
    DomainError,
    FrequencyParseError,
    NoNonzeroCombination,
    QuadratureError,
    ResourceCapError,
    WitnessNotFound,
)
from klt.fejer import FejerLaw, calibrate_c0, char_fn_sum, convolve, p_zero
from klt.frequency import LinearFormInstance, parse_frequency_file
from klt.lattice import XiResult, coefficient_bound, xi
from klt.policies import CoefficientConvention, PZeroMethod, SearchMode
from klt.poly import kronecker_transfer_check, parse_poly_file
from klt.replay import (
    WeightedSumDistribution,
    absr_identity_check,
    inverse_moment,
    k_of_r,
    key_inequality_check,
    sinc_expectation,
    small_deviation,
    xi_bound,
)
from klt.report import Check, Report
from klt.search import TargetInstance, find_witness, liminf_scan
from klt.verify import run_suite

log = logger.get()

EXIT_USAGE = 2
EXIT_RESOURCE_CAP = 3
EXIT_CHECK_FAILED = 4
EXIT_WITNESS_NOT_FOUND = 5

F = TypeVar("F", bound=Callable[..., Any])


@dataclass
class Session:
    """
    The configuration of a run and the bookkeeping shared by its commands.
    """

    config: RunConfig
    started: float = field(default_factory=time.perf_counter)

    def path(self, name: str) -> str:
        os.makedirs(self.config.output_dir, exist_ok=True)
        return os.path.join(self.config.output_dir, name)

    def finish(
        self,
        name: str,
        payload: Any,
        checks: list[Check] | None = None,
        tables: dict[str, list[dict[str, Any]]] | None = None,
        exit_on_failure: bool = True,
    ) -> Report:
        """
        Function that writes the JSON report and the CSV tables of a command.

        :param name: the file stem of the report.
        :param payload: the result object.
        :param checks: the verified inequalities.
        :param tables: CSV tables by file stem.
        :param exit_on_failure: exit with the check-failure status if a check failed.
        :return: the report.
        """

        ctx = click.get_current_context()
        echo = [ctx.command_path] + [f"{k}={v}" for k, v in sorted(ctx.params.items())]
        report = Report(
            command=echo,
            config=self.config.as_dict(),
            payload=payload,
            checks=checks or [],
            timing={"elapsed_s": time.perf_counter() - self.started},
        )
        report.write_json(self.path(f"{name}.json"), self.config.hex_mirror)
        for stem, rows in (tables or {}).items():
            export_to_csv(self.path(f"{stem}.csv"), rows)
            log.info(f"Table written to {self.path(f'{stem}.csv')}")

        if not report.passed:
            failed = [c.name for c in report.checks if not c.passed]
            log.error(f"{len(failed)} checks failed: {', '.join(failed)}")
            if exit_on_failure:
                ctx.exit(EXIT_CHECK_FAILED)
        return report


def handle_errors(fn: F) -> F:
    """
    Function that maps library errors onto the exit statuses of the command line.
    """

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except WitnessNotFound as e:
            session: Session = click.get_current_context().obj
            payload = {"best": e.best, "diagnostics": e.diagnostics}
            session.finish(click.get_current_context().info_name, payload, exit_on_failure=False)
            log.critical(str(e), exit_code=EXIT_WITNESS_NOT_FOUND)
        except ResourceCapError as e:
            log.critical(str(e), exit_code=EXIT_RESOURCE_CAP)
        except (FrequencyParseError, DomainError, NoNonzeroCombination, ConfigError) as e:
            log.critical(str(e), exit_code=EXIT_USAGE)
        except QuadratureError as e:
            log.critical(f"{e} (estimated error {e.abserr:.3g})")

    return wrapper  # type: ignore


def parse_floats(text: str) -> list[float]:
    """
    Function that parses a comma separated list of reals.

    :raises click.BadParameter: if an entry is not a real.
    """

    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma separated reals, got {text!r}") from None


def parse_sweep(text: str) -> tuple[str, range]:
    """
    Function that parses `name=a..b` into the name and the inclusive integer range.
    """

    try:
        name, bounds = text.split("=", 1)
        lo, hi = bounds.split("..", 1)
        return name.strip(), range(int(lo), int(hi) + 1)
    except ValueError:
        raise click.BadParameter(f"expected name=a..b, got {text!r}") from None


def parse_length(text: str) -> float | None:
    """
    Function that parses an interval length, `auto` meaning the localization bound.
    """

    if text == "auto":
        return None
    try:
        T = float(text)
    except ValueError:
        raise click.BadParameter(f"expected a real or 'auto', got {text!r}") from None
    return T


def load_instance(session: Session, path: str) -> LinearFormInstance:
    precision = session.config.precision
    return LinearFormInstance.of(parse_frequency_file(path, precision), precision)


def check_betas(instance: LinearFormInstance, betas: list[float]) -> tuple[float, ...]:
    if len(betas) != instance.N:
        raise click.BadParameter(f"expected {instance.N} betas, got {len(betas)}")
    return tuple(betas)


def theorem_interval(
    session: Session, instance: LinearFormInstance, omega: int
) -> tuple[float, XiResult]:
    """
    Function that computes the localization bound T for the frequencies at accuracy 1/omega.

    :raises DomainError: if T leaves the float range.
    """

    cfg = session.config
    params = choose_params(instance.N, omega, cfg.c0)
    U = coefficient_bound(instance.N, omega, cfg.c0)
    res = xi(instance, U, cfg.zero_policy, cfg.enumeration_cap, cfg.workers)
    T = theorem1_bound(params, float(res.value))
    if not T.representable:
        raise DomainError(f"localization bound e^{T.log:.4g} overflows; pass --T")
    log.info(f"Localization bound: U={U}, Xi={float(res.value):.6g}, T={T.value:.6g}")
    return T.value, res


FREQ_FILE = click.Path(exists=True, dir_okay=False, resolve_path=True)


@click.group()
@click.option(
    "-c",
    "--config-file",
    required=False,
    type=click.Path(exists=True, resolve_path=True, dir_okay=False),
    help="The path to the .yml configuration, KLT_CONFIG when omitted",
)
@click.option(
    "--log-level",
    default="info",
    type=click.Choice(
        ["info", "warning", "error", "debug"],
        case_sensitive=False,
    ),
    show_default=True,
)
@click.option("-j", "--workers", type=int, default=None, help="Override of the worker count")
@click.option("-p", "--precision", type=int, default=None, help="Override of the precision (bits)")
@click.option("--c0", type=float, default=None, help="Override of the lower-bound constant")
@click.option(
    "--zero-policy",
    type=click.Choice(["auto", "threshold", "exact-multiplicative"], case_sensitive=False),
    default=None,
    help="Override of the zero-detection policy",
)
@click.option("-o", "--output-dir", type=click.Path(file_okay=False), default=None)
@click.option("--seed", type=int, default=None, help="Override of the sampler seed")
@click.pass_context
def main(
    ctx: click.Context,
    config_file: str | None,
    log_level: Literal["info", "warning", "error", "debug"],
    workers: int | None,
    precision: int | None,
    c0: float | None,
    zero_policy: str | None,
    output_dir: str | None,
    seed: int | None,
) -> None:
    """
    Quantitative localized Kronecker approximation toolkit.

    Every command writes `<output-dir>/<command>.json`; tables go next to it as CSV.
    """

    log.setLevel(str(log_level).upper())

    try:
        config = load_config(config_file).override(
            workers=workers, precision=precision, c0=c0, output_dir=output_dir, seed=seed
        )
        if zero_policy is not None:
            policy = None if zero_policy.lower() == "auto" else zero_policy
            config = replace(config, zero_policy=policy)
    except ConfigError as e:
        log.critical(str(e), exit_code=EXIT_USAGE)
        return

    ctx.obj = Session(config)


@main.command("xi")
@click.argument("freq_file", type=FREQ_FILE)
@click.option("--U", "U", type=int, default=None, help="The coefficient bound")
@click.option(
    "--from-theorem",
    type=(int, int),
    default=None,
    metavar="N OMEGA",
    help="Use the coefficient bound floor(6 omega log(N omega/C0))",
)
@click.pass_obj
@handle_errors
def cmd_xi(
    session: Session, freq_file: str, U: int | None, from_theorem: tuple[int, int] | None
) -> None:
    """
    Smallest nonzero |sum u_j lambda_j| with max |u_j| <= U.
    """

    if (U is None) == (from_theorem is None):
        raise click.UsageError("give exactly one of --U and --from-theorem")
    instance = load_instance(session, freq_file)
    cfg = session.config
    if from_theorem is not None:
        N, omega = from_theorem
        U = coefficient_bound(N, omega, cfg.c0)
        log.info(f"Coefficient bound from N={N}, omega={omega}: U={U}")
    assert U is not None

    res = xi(instance, U, cfg.zero_policy, cfg.enumeration_cap, cfg.workers)
    log.info(f"Xi = {float(res.value):.10g} at {res.witness}")
    session.finish("xi", {"frequencies": instance.describe(), "U": U, "xi": res})


@main.command("bound")
@click.argument("freq_file", type=FREQ_FILE)
@click.argument("N", type=int)
@click.argument("omega", type=int, required=False)
@click.option(
    "--epsilon", type=float, default=None, help="Epsilon of the Chen and log-prime bounds"
)
@click.option("--sweep", type=str, default=None, help="Sweep omega, as omega=a..b")
@click.option(
    "--convention",
    type=click.Choice([c.label for c in CoefficientConvention], case_sensitive=False),
    default=CoefficientConvention.THEOREM.label,
    show_default=True,
)
@click.pass_obj
@handle_errors
def cmd_bound(
    session: Session,
    freq_file: str,
    n: int,
    omega: int | None,
    epsilon: float | None,
    sweep: str | None,
    convention: str,
) -> None:
    """
    Localization bounds of the frequencies for N and omega, or over a sweep of omega.
    """

    if sweep is not None:
        name, omegas = parse_sweep(sweep)
        if name != "omega":
            raise click.BadParameter(f"only omega can be swept, got {name!r}")
    elif omega is None:
        raise click.UsageError("give OMEGA or --sweep omega=a..b")
    else:
        omegas = range(omega, omega + 1)

    cfg = session.config
    instance = load_instance(session, freq_file)
    conv = CoefficientConvention.from_string(convention)
    reports = []
    checks = []
    for w in omegas:
        report = compare_bounds(
            n, w, cfg.c0, instance, epsilon, conv, cfg.zero_policy, cfg.enumeration_cap, cfg.workers
        )
        for note in report.notes:
            log.info(f"omega={w}: {note}")
        lhs, rhs = report.parameter_inequality
        checks.append(Check.leq(f"(omega/2m)^(2k) N <= p_zero/2 at omega={w}", lhs, rhs))
        reports.append(report)

    payload = {
        "frequencies": instance.describe(),
        "reports": reports,
        "chen_comparison": [chen_comparison(r) for r in reports],
    }
    session.finish("bound", payload, checks, {"bound": [r.as_row() for r in reports]})


@main.command("search")
@click.argument("freq_file", type=FREQ_FILE)
@click.option("--betas", type=str, required=True, help="Comma separated targets")
@click.option("--d", "d", type=float, default=0.0, show_default=True)
@click.option("--T", "T", type=str, default="auto", show_default=True, help="Length or 'auto'")
@click.option("--omega", type=int, required=True)
@click.option(
    "--mode",
    type=click.Choice([m.label for m in SearchMode], case_sensitive=False),
    default=SearchMode.FIRST_HIT.label,
    show_default=True,
)
@click.pass_obj
@handle_errors
def cmd_search(
    session: Session, freq_file: str, betas: str, d: float, T: str, omega: int, mode: str
) -> None:
    """
    A t in [d, d + T] with ||t lambda_j - beta_j|| <= 1/omega for every j.
    """

    cfg = session.config
    instance = load_instance(session, freq_file)
    targets = check_betas(instance, parse_floats(betas))
    length = parse_length(T)
    xi_res = None
    if length is None:
        length, xi_res = theorem_interval(session, instance, omega)

    target = TargetInstance(instance, targets, d, length, omega)
    result = find_witness(
        target, SearchMode.from_string(mode), cfg.slack_for(omega), cfg.scan_cap, cfg.workers
    )
    log.info(f"Witness t={result.t!r} with sup discrepancy {result.sup_discrepancy:.6g}")
    checks = [Check.leq("sup discrepancy <= 1/omega", result.sup_discrepancy, 1 / omega)]
    payload = {"frequencies": instance.describe(), "T": length, "xi": xi_res, "witness": result}
    session.finish("search", payload, checks)


@main.command("verify")
@click.argument("suite", type=click.Choice(["fejer", "replay", "all"], case_sensitive=False))
@click.option("--quick", is_flag=True, default=False, help="Reduced grids")
@click.pass_obj
@handle_errors
def cmd_verify(session: Session, suite: str, quick: bool) -> None:
    """
    Run the invariant suites of the Fejer law and of the replayed localization argument.
    """

    checks = run_suite(suite.lower(), quick, progress=True, seed=session.config.seed)
    payload = {"suite": suite, "quick": quick}
    session.finish("verify", payload, checks, {"verify": [asdict(c) for c in checks]})


@main.command("dirichlet")
@click.argument("poly_file", type=FREQ_FILE)
@click.option("--omega", type=int, required=True)
@click.option("--theta", type=str, required=True, help="Comma separated torus target")
@click.option("--d", "d", type=float, default=0.0, show_default=True)
@click.option("--T", "T", type=str, default="auto", show_default=True, help="Length or 'auto'")
@click.option(
    "--mode",
    type=click.Choice([m.label for m in SearchMode], case_sensitive=False),
    default=SearchMode.FIRST_HIT.label,
    show_default=True,
)
@click.pass_obj
@handle_errors
def cmd_dirichlet(
    session: Session, poly_file: str, omega: int, theta: str, d: float, T: str, mode: str
) -> None:
    """
    Transfer a torus target to D(2 pi tau) and check the approximation error bound.
    """

    cfg = session.config
    poly = parse_poly_file(poly_file, cfg.precision)
    targets = check_betas(poly.instance, parse_floats(theta))
    report = kronecker_transfer_check(
        poly,
        targets,
        omega,
        d,
        parse_length(T),
        cfg.c0,
        SearchMode.from_string(mode),
        cfg.slack_for(omega),
        cfg.zero_policy,
        cfg.enumeration_cap,
        cfg.scan_cap,
        cfg.workers,
    )
    log.info(f"tau={report.tau!r}: gap {report.gap:.6g} against bound {report.bound:.6g}")
    session.finish("dirichlet", report, report.checks)


@main.group("fejer")
def fejer_group() -> None:
    """
    The Fejer law and its sums S_k.
    """


@fejer_group.command("pmf")
@click.argument("m", type=int)
@click.argument("k", type=int)
@click.pass_obj
@handle_errors
def cmd_fejer_pmf(session: Session, m: int, k: int) -> None:
    """
    The exact law of S_k.
    """

    dist = convolve(FejerLaw(m), k, session.config.support_cap)
    rows = [
        {"nu": nu, "p": str(p), "p_float": float(p)} for nu, p in dist.as_dict().items()
    ]
    checks = [Check.close("total mass", float(dist.total_mass()), 1.0, 0.0)]
    payload = {"m": m, "k": k, "pmf": dist.as_dict()}
    session.finish("fejer_pmf", payload, checks, {"fejer_pmf": rows})


@fejer_group.command("charfn")
@click.argument("m", type=int)
@click.argument("k", type=int)
@click.option("--points", type=int, default=1000, show_default=True)
@click.pass_obj
@handle_errors
def cmd_fejer_charfn(session: Session, m: int, k: int, points: int) -> None:
    """
    The characteristic function of S_k on [0, 1/2].
    """

    dist = convolve(FejerLaw(m), k, session.config.support_cap)
    t = np.linspace(0.0, 0.5, max(2, points))
    phi = np.asarray(char_fn_sum(dist, t))
    fourier = np.asarray(dist.fourier_sum(t))
    deviation = float(np.max(np.abs(phi - fourier)))
    checks = [Check.leq("closed form against Fourier sum", deviation, 1e-12)]
    rows = [{"t": a, "phi": b} for a, b in zip(t.tolist(), phi.tolist())]
    payload = {"m": m, "k": k, "deviation": deviation}
    session.finish("fejer_charfn", payload, checks, {"fejer_charfn": rows})


@fejer_group.command("pzero")
@click.argument("m", type=int)
@click.argument("k", type=int)
@click.option(
    "--method",
    type=click.Choice([p.label for p in PZeroMethod], case_sensitive=False),
    default=PZeroMethod.EXACT.label,
    show_default=True,
)
@click.pass_obj
@handle_errors
def cmd_fejer_pzero(session: Session, m: int, k: int, method: str) -> None:
    """
    P{S_k = 0}.
    """

    value = p_zero(m, k, PZeroMethod.from_string(method), session.config.quad_rtol)
    log.info(f"P{{S_k = 0}} = {float(value):.12g}")
    session.finish("fejer_pzero", {"m": m, "k": k, "method": method, "p_zero": value})


@fejer_group.command("calibrate")
@click.option("--m-max", type=int, default=64, show_default=True)
@click.option("--k-max", type=int, default=200, show_default=True)
@click.pass_obj
@handle_errors
def cmd_fejer_calibrate(session: Session, m_max: int, k_max: int) -> None:
    """
    The largest C0 with P{S_k = 0} >= C0/(m sqrt(k)) over a grid of (m, k).
    """

    cfg = session.config
    cal = calibrate_c0(
        m_max, k_max, rtol=cfg.quad_rtol, default_c0=cfg.c0, default_k0=cfg.k0, progress=True
    )
    checks = [Check.leq(f"violations of C0={cfg.c0}", len(cal.violations), 0)]
    rows = [asdict(v) for v in cal.violations]
    session.finish("fejer_calibrate", cal, checks, {"fejer_calibrate": rows} if rows else None)


@main.group("replay")
def replay_group() -> None:
    """
    Exact replay of the weighted sums Z_N and the K(r) machinery.
    """


def _weighted_sum(session: Session, freq_file: str, m: int, k: int) -> WeightedSumDistribution:
    cfg = session.config
    instance = load_instance(session, freq_file)
    dist = convolve(FejerLaw(m), k, cfg.support_cap)
    return WeightedSumDistribution.build(
        instance, dist, cfg.zero_policy, cfg.support_cap, cfg.workers
    )


@replay_group.command("sinc")
@click.argument("freq_file", type=FREQ_FILE)
@click.option("--m", "m", type=int, required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--T", "T", type=float, required=True)
@click.pass_obj
@handle_errors
def cmd_replay_sinc(session: Session, freq_file: str, m: int, k: int, T: float) -> None:
    """
    E|sin(pi T Z_N)/(pi Z_N)| and the estimates above it.
    """

    wsd = _weighted_sum(session, freq_file, m, k)
    sinc = sinc_expectation(wsd, T)
    inverse = inverse_moment(wsd)
    bound = xi_bound(wsd.component, wsd.instance, session.config.zero_policy)
    checks = [
        Check.leq("E|sinc| <= E[1/(pi|Z|)]", sinc, inverse),
        Check.leq("E[1/(pi|Z|)] <= 1/(pi Xi)", inverse, bound),
    ]
    payload = {"m": m, "k": k, "T": T, "sinc": sinc, "inverse_moment": inverse, "bound": bound}
    session.finish("replay_sinc", payload, checks)


@replay_group.command("smalldev")
@click.argument("freq_file", type=FREQ_FILE)
@click.option("--m", "m", type=int, required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--epsilon", type=float, required=True)
@click.pass_obj
@handle_errors
def cmd_replay_smalldev(session: Session, freq_file: str, m: int, k: int, epsilon: float) -> None:
    """
    P{|Z_N| < epsilon}, exactly.
    """

    wsd = _weighted_sum(session, freq_file, m, k)
    value = small_deviation(wsd, epsilon)
    log.info(f"P{{|Z_N| < {epsilon}}} = {value}")
    session.finish("replay_smalldev", {"m": m, "k": k, "epsilon": epsilon, "probability": value})


@replay_group.command("kr")
@click.argument("r", type=float)
@click.option("--x", "x", type=float, default=None, help="Also check the |x|^r identity at x")
@click.pass_obj
@handle_errors
def cmd_replay_kr(session: Session, r: float, x: float | None) -> None:
    """
    K(r) = Gamma(2-r)/(r(1-r)) sin((1-r) pi/2).
    """

    payload: dict[str, Any] = {"r": r, "K": k_of_r(r)}
    checks = []
    if x is not None:
        identity = absr_identity_check(x, r)
        payload["identity"] = identity
        checks.append(Check.leq("|x|^r identity", identity.relative_error, 1e-6))
    session.finish("replay_kr", payload, checks)


@replay_group.command("check")
@click.argument("freq_file", type=FREQ_FILE)
@click.option("--m", "m", type=int, required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--betas", type=str, required=True)
@click.option("--d", "d", type=float, default=0.0, show_default=True)
@click.option("--T", "T", type=float, required=True)
@click.pass_obj
@handle_errors
def cmd_replay_check(
    session: Session, freq_file: str, m: int, k: int, betas: str, d: float, T: float
) -> None:
    """
    The decomposition of the integral of Upsilon and the bounds on H and H_j.
    """

    cfg = session.config
    instance = load_instance(session, freq_file)
    targets = check_betas(instance, parse_floats(betas))
    dist = convolve(FejerLaw(m), k, cfg.support_cap)
    checks = key_inequality_check(
        dist, instance, targets, d, T, None, cfg.zero_policy, cfg.support_cap, cfg.quad_rtol
    )
    session.finish("replay_check", {"m": m, "k": k, "d": d, "T": T}, checks)


@main.command("liminf")
@click.argument("freq_file", type=FREQ_FILE)
@click.option("--betas", type=str, required=True)
@click.option("--t-max", type=float, required=True)
@click.option("--samples", type=int, default=10_000, show_default=True)
@click.option("--integer-grid", is_flag=True, default=False, help="Sample t = 3, 4, ..., t-max")
@click.pass_obj
@handle_errors
def cmd_liminf(
    session: Session, freq_file: str, betas: str, t_max: float, samples: int, integer_grid: bool
) -> None:
    """
    Trace of t^(1/N)/sqrt(log t) sup_j ||t lambda_j - beta_j|| and its running minimum.
    """

    instance = load_instance(session, freq_file)
    targets = check_betas(instance, parse_floats(betas))
    trace = liminf_scan(instance, targets, t_max, samples, integer_grid)
    columns = trace.as_columns()
    rows = [dict(zip(columns, values)) for values in zip(*columns.values())]
    final = float(trace.running_min[-1]) if len(trace.running_min) else math.inf
    payload = {"samples": len(trace.t), "final_running_min": final}
    session.finish("liminf", payload, None, {"liminf": rows})


if __name__ == "__main__":
    main()
