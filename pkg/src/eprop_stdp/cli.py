"""Command-line entry point: ``eprop-stdp {two-neuron,spike-timing,gradcheck}``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import neurons as nm
from .bptt import gradient_check
from .errors import ConfigError, ContractViolation, InvalidRate, NumericalDivergence
from .experiments import SpikeTimingConfig, TwoNeuronConfig, run_spike_timing, run_two_neuron
from .io import load_config, resolve_out_dir, write_sidecar, write_training, write_two_neuron

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CHECK_FAILED = 0, 1, 2, 3
GRADCHECK_TOL = 1e-6


@dataclasses.dataclass
class GradcheckConfig:
    model: str = nm.STDP_LIF
    neurons: int = 4
    steps: int = 100
    seed: int = 0
    tolerance: float = GRADCHECK_TOL

    def __post_init__(self):
        nm.check_model(self.model)
        if not 1 <= self.neurons or not 1 <= self.steps:
            raise ContractViolation("neurons and steps must be positive")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON file overriding defaults")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="eprop-stdp", description="e-prop learning with STDP-like spiking neurons")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tn = sub.add_parser("two-neuron", parents=[common], help="two-neuron STDP demonstration")
    tn.add_argument("--model", choices=nm.MODELS)
    tn.add_argument("--steps", type=int, dest="T", metavar="T")
    tn.add_argument("--out", metavar="DIR")

    st = sub.add_parser("spike-timing", parents=[common], help="train on the spike-timing regression task")
    st.add_argument("--model", choices=(nm.LIF, nm.STDP_LIF))
    st.add_argument("--epochs", type=int)
    st.add_argument("--batch", type=int)
    st.add_argument("--runs", type=int, dest="n_runs")
    st.add_argument("--steps", type=int, dest="T", metavar="T")
    st.add_argument("--workers", type=int)
    st.add_argument("--out", metavar="DIR")

    gc = sub.add_parser("gradcheck", parents=[common], help="compare e-prop with BPTT on a random net")
    gc.add_argument("--model", choices=nm.MODELS)
    gc.add_argument("--neurons", type=int)
    gc.add_argument("--steps", type=int)
    return p


def _resolve(cls, args, names: tuple[str, ...], command: str, fixed: dict | None = None):
    """Defaults, then the config file, then explicit flags."""
    allowed = {f.name for f in dataclasses.fields(cls)}
    values = dict(fixed or {})
    if args.config:
        values.update(load_config(args.config, command, allowed))
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return cls(**values)


def _two_neuron(args) -> int:
    cfg = _resolve(TwoNeuronConfig, args, ("model", "seed", "T"), "two-neuron")
    run = run_two_neuron(cfg)
    path = write_two_neuron(run, resolve_out_dir(args.out))
    write_sidecar(path, "two-neuron", cfg, run.phase_stats())
    print(path)
    return EXIT_OK


def _spike_timing(args) -> int:
    cfg = _resolve(SpikeTimingConfig, args, ("model", "seed", "epochs", "batch", "n_runs", "T", "workers"),
                   "spike-timing")
    summary = run_spike_timing(cfg)
    mse, rate = summary.final()
    path = write_training(summary, resolve_out_dir(args.out))
    write_sidecar(path, "spike-timing", cfg,
                  {"final_mse_mean": float(mse.mean()), "final_rate_mean_hz": float(rate.mean())})
    print(path)
    return EXIT_OK


def _gradcheck(args) -> int:
    cfg = _resolve(GradcheckConfig, args, ("model", "neurons", "steps", "seed"), "gradcheck")
    err, spikes = gradient_check(cfg.model, cfg.neurons, cfg.steps, cfg.seed)
    print(f"model={cfg.model} neurons={cfg.neurons} steps={cfg.steps} spikes={int(spikes)} "
          f"max_rel_err={err:.3e}")
    return EXIT_OK if err <= cfg.tolerance else EXIT_CHECK_FAILED


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"two-neuron": _two_neuron, "spike-timing": _spike_timing, "gradcheck": _gradcheck}[args.command]
    try:
        return handler(args)
    except NumericalDivergence as exc:
        print(f"error: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, ContractViolation, InvalidRate, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
