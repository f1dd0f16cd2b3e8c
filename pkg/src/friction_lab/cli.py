import shutil
import sys
from importlib.resources import as_file, files
from pathlib import Path
from typing import Any, Optional

from loguru import logger
from pydantic import ValidationError

from . import harness, init_example, output
from ._utils import CONFIG_FILE
from .arg import describe_validation_error
from .config import CLIConfig, LabConfig, RunConfig, labcfg
from .errors import AcceptanceError, ConfigError, LabError
from .executor import Executor


def log_cmd() -> None:
    logger.trace("running flab command", command=sys.argv, typename="CMD")


def _load(config: str, command: str) -> RunConfig:
    run = RunConfig.load(config)
    logger.info(f"reproduce with: {run.reproduce(command)}")
    return run


def simulate(config: str, model: str = "class2") -> None:
    """
    Run one model to t_end and write snapshots and the entropy budget.
    ```
    flab simulate --model class1 --config run.toml
    ```
    """
    if model not in ("class1", "class2"):
        raise ConfigError(f"--model must be class1 or class2, got {model!r}")
    harness.run_single(_load(config, f"simulate --model {model}"), model)


def paired(config: str) -> None:
    """
    Run Class-II and Class-I side by side and write the relative entropy series.
    ```
    flab paired --config run.toml
    ```
    """
    result = harness.run_paired(_load(config, "paired"))
    print(f"H(0) = {result.H0!r}, H(t_end) = {result.H_end!r}")


def sweep(config: str, executor: Optional[str] = None, workers: Optional[int] = None) -> None:
    """
    Paired runs over friction.epsilon_sweep; exit status 3 when the log-log slope
    of H(t_end) falls below sweep.slope_threshold.
    ```
    flab sweep --config run.toml --executor process --workers 4
    ```
    """
    run = _load(config, "sweep")
    ex = None
    if executor is not None or workers is not None:
        ex = Executor.resolve_subclass(executor or run.sweep.executor or labcfg.executor.name)(
            workers=workers or run.sweep.workers or labcfg.executor.workers
        )
    result = harness.run_sweep(run, ex)
    for m in result.members:
        print(f"epsilon={m.epsilon!r} H(0)={m.H0!r} H(t_end)={m.H_end!r}")
    if result.fit is None:
        raise AcceptanceError("no slope could be fitted to H(t_end)")
    print(f"slope = {result.fit.slope!r} (threshold {result.threshold})")
    if not result.monotone:
        logger.warning("H(t_end) is not monotone in epsilon")
    if not result.passed:
        raise AcceptanceError(
            f"slope {result.fit.slope:.3f} below threshold {result.threshold}"
        )


def check_identity(config: Optional[str] = None) -> None:
    """
    Refinement study of the relative entropy balance on manufactured solutions.
    ```
    flab check-identity --config run.toml
    ```
    """
    run = _load(config, "check-identity") if config is not None else RunConfig()
    studies = harness.check_identity_suite(run)
    for s in studies:
        defects = " ".join(f"{d.pointwise:.3e}" for d in s.defects)
        print(f"{s.pair}: defects {defects} passed={s.passed}")
    failed = [s.pair for s in studies if not s.passed]
    if failed:
        raise AcceptanceError(f"identity defect did not converge for {failed}")


def check_thermo(samples: int = 1000, seed: int = 0, config: Optional[str] = None) -> None:
    """
    Gibbs-Duhem, chemical potential and entropy consistency, Gibbs stability and
    coercivity of the relative entropy over random states.
    ```
    flab check-thermo --samples 1000 --seed 0
    ```
    """
    run = _load(config, "check-thermo") if config is not None else RunConfig()
    audit = harness.check_thermo(run, samples, seed)
    print(audit.model_dump_json(indent=2))
    if not audit.passed:
        raise AcceptanceError("thermodynamic audit failed")


def plot(csv: str, out: Optional[str] = None) -> None:
    """
    Convert a CSV output to a gnuplot data file.
    ```
    flab plot --csv flab_out/class2_snapshots.csv
    ```
    """
    output.to_gnuplot(csv, out)


def init():
    """
    Write an example run.toml and a flab_config.toml into the working directory.
    """
    for f in ["run.toml", CONFIG_FILE]:
        if Path(f).exists():
            raise ConfigError(f"{f} already exists.")

    example_data = files(init_example)
    with as_file(example_data / "run.toml") as p:
        shutil.copy(p, "run.toml")

    cfg = LabConfig(
        cli=CLIConfig(
            serialize_log=True,
            logging_cmd=True,
            log_file=Path("log/flab.log"),
            log_rotation="10 MB",
            log_compression="zip",
        ),
    )
    logger.info(f"Writing lab settings to {CONFIG_FILE}")
    Path(CONFIG_FILE).write_text(cfg.to_toml())

    print("""Try:
    flab --help
    flab check-thermo --samples 100
    flab paired --config run.toml""")


def add_logger():
    logger.remove()
    logger.add(sys.stdout, level="INFO")
    logger.enable("friction_lab")

    if labcfg.cli.logging_cmd:
        logger.add(
            labcfg.cli.log_file.resolved_path,
            rotation=labcfg.cli.log_rotation,
            compression=labcfg.cli.log_compression,
            serialize=labcfg.cli.serialize_log,
            level="TRACE",
        )


def config():
    """
    Get the friction_lab configuration
    """
    return labcfg


COMMANDS: dict[str, Any] = {
    "simulate": simulate,
    "paired": paired,
    "sweep": sweep,
    "check-identity": check_identity,
    "check-thermo": check_thermo,
    "plot": plot,
    "init": init,
    "config": config,
}


def exit_code(e: BaseException) -> int:
    if isinstance(e, LabError):
        return e.exit_code
    if isinstance(e, ValidationError):
        return ConfigError.exit_code
    return 1


def handle_exception(e, debug=False):
    if debug:
        raise e

    # extract location
    tb = e.__traceback__
    while tb.tb_next:
        tb = tb.tb_next
    filename = tb.tb_frame.f_code.co_filename
    lineno = tb.tb_lineno
    funcname = tb.tb_frame.f_code.co_name

    @logger.catch
    def record_patcher(record):
        record["name"] = filename
        record["function"] = funcname
        record["line"] = lineno

    message = str(e)
    if isinstance(e, ValidationError):
        message = "\n".join(describe_validation_error(e))
    with logger.contextualize():
        logger.patch(record_patcher).error(message)

    raise SystemExit(exit_code(e))


def console_main():
    """
    This is the entry point of the flab commands.
    """
    import fire

    if len(sys.argv) >= 2 and sys.argv[1] == "--debug":
        debug = True
        sys.argv.pop(1)
    else:
        debug = False

    try:
        if len(sys.argv) >= 2:
            add_logger()
        log_cmd()
        fire.Fire(COMMANDS)
        logger.trace(
            "Cmd success", command=sys.argv, typename="CMD", dir=Path().resolve()
        )
        logger.remove()
        logger.disable("friction_lab")
    except Exception as e:
        handle_exception(e, debug)
