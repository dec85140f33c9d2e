"""`train`: runs one training configuration."""
import argparse
from pathlib import Path

from src.commands.common import CommandResult, load_run_config
from src.services.training import train


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="Train a network from a TOML run config.")
    parser.add_argument("--config", default=None, help="TOML file with dotted keys (model.variant, train.lr, ...).")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a config key; repeatable.")
    parser.add_argument("--out", default=None, help="Output directory (overrides output_dir).")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> CommandResult:
    config = load_run_config(args.config, args.overrides)
    if args.out is not None:
        config = config.model_copy(update={"output_dir": Path(args.out)})
    result = train(config)
    train_mape = result.run_log.last_value("train", "mape")
    headline = f", last train MAPE {train_mape:.3f}" if train_mape is not None else ""
    return CommandResult(
        summary=f"train: {config.model.variant.value} ran {result.total_steps} steps{headline}",
        paths=[result.run_log_path, result.final_checkpoint],
    )
