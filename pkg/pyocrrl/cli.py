from __future__ import print_function, division
import sys
import json
import argparse

from pyocrrl.errors import OcrrlError, ConfigError, ContractError, \
    DatasetError
from pyocrrl.config import RunConfig
from pyocrrl.bench import Bench
from pyocrrl.grpo import run_toy_policy, write_trajectory, \
    read_rollout_groups, entropy_filter, group_entropies


EXIT_OK = 0

# flag dest -> RunConfig variable
COMMON_FLAGS = ("dataset_path", "output_path", "workers", "log_file")
SCORE_FLAGS = ("backend", "endpoint", "timeout", "retries", "format_weight")
GRPO_FLAGS = ("target", "group_size", "iterations", "step_size", "seed",
              "epsilon", "inner_steps")
FILTER_FLAGS = ("reward_bins", "entropy_threshold")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pyocrrl",
        description="OCR reward scoring, GRPO tools and benchmark reports")
    sub = parser.add_subparsers(dest="command")
    sub.required = True

    def common(p):
        p.add_argument("-c", "--config", help="reward control file")
        p.add_argument("--dataset", dest="dataset_path")
        p.add_argument("-o", "--output", dest="output_path")
        p.add_argument("--workers", type=int)
        p.add_argument("--log-file", dest="log_file")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    p = common(sub.add_parser("score", help="score a jsonl dataset and " \
                                            "write the report"))
    p.add_argument("--backend", choices=("stub", "remote"))
    p.add_argument("--endpoint")
    p.add_argument("--timeout", type=float)
    p.add_argument("--retries", type=int)
    p.add_argument("--format-weight", dest="format_weight", type=float)

    p = common(sub.add_parser("grpo-sim", help="run the toy GRPO " \
                                               "simulation, write a csv"))
    p.add_argument("--target")
    p.add_argument("--group-size", dest="group_size", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--step-size", dest="step_size", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--inner-steps", dest="inner_steps", type=int)

    p = common(sub.add_parser("filter", help="entropy-filter rollout " \
                                             "groups, write the kept ids"))
    p.add_argument("--reward-bins", dest="reward_bins", type=int)
    p.add_argument("--threshold", dest="entropy_threshold", type=float)

    common(sub.add_parser("validate-config", help="load and check a " \
                                                  "reward control file"))
    return parser


def load_config(args, names, environ=None):
    """defaults < config file < environment < flags"""
    config = RunConfig(args.config) if args.config else RunConfig()
    config.apply_env(environ)
    for name in COMMON_FLAGS + names:
        value = getattr(args, name, None)
        if value is not None:
            config.set(name, value)
    return config


def cmd_score(config, verbose=False):
    """score the dataset and write the report to output_path"""
    config.validate()
    bench = Bench(config, verbose=verbose)
    try:
        return bench.write_report()
    finally:
        bench.logger.close()


def cmd_grpo_sim(config):
    """write the toy simulation trajectory csv to output_path"""
    config.validate(require_dataset=False)
    df = run_toy_policy(config.target, group_size=config.group_size,
                        iterations=config.iterations,
                        step_size=config.step_size, seed=config.seed,
                        epsilon=config.epsilon,
                        inner_steps=config.inner_steps,
                        sigma_guard=config.sigma_guard)
    write_trajectory(df, config.resolve_path("output_path"))
    return df


def cmd_filter(config):
    """write the entropy-filtered input ids, one per line, to output_path"""
    config.validate()
    groups = read_rollout_groups(config.resolve_path("dataset_path"))
    try:
        group_entropies(groups, config.reward_bins)
    except ContractError as e:
        raise DatasetError(str(e))
    ids = entropy_filter(groups, reward_bins=config.reward_bins,
                         threshold=config.entropy_threshold)
    with open(config.resolve_path("output_path"), 'w', encoding="utf-8",
              newline='\n') as f:
        for input_id in ids:
            f.write(input_id + '\n')
    return ids


def cmd_validate_config(config):
    config.validate()
    return config.summary()


def error_payload(e):
    """machine-readable description of a failure"""
    if isinstance(e, OcrrlError):
        return {"error": e.kind, "message": str(e), "exit_code": e.exit_code}
    return {"error": "internal", "message": "{0}: {1}".
            format(type(e).__name__, str(e)), "exit_code": 5}


def main(argv=None, environ=None):
    """command line entry point; returns the process exit code"""
    args = build_parser().parse_args(argv)
    try:
        if args.command == "score":
            config = load_config(args, SCORE_FLAGS, environ)
            cmd_score(config, verbose=args.verbose)
        elif args.command == "grpo-sim":
            config = load_config(args, GRPO_FLAGS, environ)
            cmd_grpo_sim(config)
        elif args.command == "filter":
            config = load_config(args, FILTER_FLAGS, environ)
            cmd_filter(config)
        elif args.command == "validate-config":
            if not args.config:
                raise ConfigError("validate-config: --config is required")
            config = load_config(args, (), environ)
            print(cmd_validate_config(config).to_string(index=False))
    except Exception as e:
        payload = error_payload(e)
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return payload["exit_code"]
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
