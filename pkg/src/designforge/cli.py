"""Command line front end.

Every command writes versioned JSON (``"schema": 1``) to stdout or ``--output``.
Exit codes: 0 pass, 1 a check failed, 2 usage error. Errors are reported on
stderr as a JSON object with a ``code`` field.

Flags may also come from a ``--config`` file of ``key = value`` lines (``#``
starts a comment); flags given on the command line win.
"""

import argparse
import json
import sys
import time
from fractions import Fraction

from .caps import current_caps, parse_caps, use_caps
from .design import build_design, enumerate_design_moment, sample_circuit
from .errors import DesignForgeError
from .expanders import build_expander, certify_mu, graph_from_manifest
from .verify import (
    check_base_gap,
    check_kappa_gram,
    check_perm_gap,
    check_projector_lemma,
    check_reptheory_coeffs,
    check_tau_bounds,
    check_trace_lemma,
)
from .walks import dump_monomials

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CHECK_NAMES = ("kappa", "reptheory", "trace-lemma", "projectors", "tau", "perm-gap", "base-gap")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers: {text!r}") from exc


def _common(p):
    p.add_argument("--config", help="file of key = value defaults")
    p.add_argument("--output", "-o", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall-clock runtimes (breaks byte-identical output)")
    p.add_argument("--caps", default="", help="cap overrides, e.g. dense_dim=8192,enumeration=131072")


def _design_args(p):
    p.add_argument("--group", choices=("SO", "SU", "O", "U"), default="SO")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--eps", type=_fraction, default=Fraction(1, 16))
    p.add_argument("--delta", type=_fraction, default=None)
    p.add_argument("--stages", type=int, default=2)
    p.add_argument("--degrees", type=_int_list, default=None, help="per-stage graph degrees")


def build_parser():
    parser = _Parser(prog="designforge", description="Compile and verify explicit approximate designs.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("sample", help="seed -> circuit JSON")
    _design_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--monomial", action="store_true", help="also report the walk monomial")
    _common(p)

    p = sub.add_parser("build", help="design and cascade manifest")
    _design_args(p)
    _common(p)

    p = sub.add_parser("enumerate", help="exact design error over every seed")
    _design_args(p)
    p.add_argument("--k-eval", type=int, default=None)
    _common(p)

    p = sub.add_parser("verify", help="run numerical checks")
    p.add_argument("--check", choices=CHECK_NAMES + ("all",), default="all")
    p.add_argument("--group", choices=("SO", "SU"), default="SO")
    p.add_argument("--D", type=int, default=64)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    _common(p)

    p = sub.add_parser("expander-cert", help="certify a graph manifest or build one")
    p.add_argument("--manifest", help="graph manifest JSON file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--mu-target", type=float, default=None)
    _common(p)

    p = sub.add_parser("perm-gap", help="gap of the simple 3-bit permutation walk")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--k", type=int, default=2)
    _common(p)
    return parser, sub


def read_config(path):
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(subparser, config):
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in config.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        if action.nargs == 0:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
            continue
        try:
            converted = action.type(value) if action.type else value
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from exc
        if action.choices is not None and converted not in action.choices:
            raise UsageError(f"config key {key!r}: {converted!r} not in {list(action.choices)}")
        defaults[key] = converted
    subparser.set_defaults(**defaults)
    for action in subparser._actions:
        if action.dest in defaults and action.required:
            action.required = False


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a path")
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.partition("=")[2]
    return None


def parse_args(argv):
    parser, sub = build_parser()
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    if command not in sub.choices:
        if command is None and ("-h" in argv or "--help" in argv):
            return parser.parse_args(argv)
        if command is None:
            raise UsageError("a subcommand is required: " + ", ".join(sub.choices))
        raise UsageError(f"unknown subcommand {command!r}; choose from " + ", ".join(sub.choices))
    path = _config_path(argv)
    if path:
        try:
            config = read_config(path)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        _apply_config(sub.choices[command], config)
    return parser.parse_args(argv)


def _design(args):
    return build_design(args.group, args.n, args.k, args.eps, args.delta, args.stages, args.degrees)


def cmd_sample(args):
    spec = _design(args)
    circuit = sample_circuit(spec, args.seed)
    out = circuit.to_dict()
    out["seed"] = args.seed
    out["seed_bits"] = spec.seed_bits
    if args.monomial:
        index = args.seed >> spec.lift_bit
        out["monomial"] = dump_monomials([spec.cascade.monomial(index)]).strip()
    return out, True


def cmd_build(args):
    return _design(args).manifest(), True


def cmd_enumerate(args):
    spec = _design(args)
    report = enumerate_design_moment(spec, args.k_eval)
    ok = report["design_error_op"] <= report["f_bound"] + 1e-9
    return report, ok


def run_checks(args):
    names = CHECK_NAMES if args.check == "all" else (args.check,)
    reports = []
    for name in names:
        if name == "kappa":
            reports.append(check_kappa_gram(args.D, args.k))
        elif name == "reptheory":
            reports.append(check_reptheory_coeffs(args.m, args.group, args.trials, args.seed))
        elif name == "trace-lemma":
            reports.append(check_trace_lemma(args.m, args.group, args.trials, args.seed))
        elif name == "projectors":
            reports.append(check_projector_lemma(args.instances, args.seed))
        elif name == "tau":
            reports.append(check_tau_bounds(args.group, args.m, args.k, args.seed))
        elif name == "perm-gap":
            reports.append(check_perm_gap(args.n, max(args.k, 1)))
        elif name == "base-gap":
            reports.append(check_base_gap(args.group, args.k))
    return reports


def cmd_verify(args):
    reports = run_checks(args)
    return reports, all(r.passed for r in reports)


def cmd_expander_cert(args):
    if args.manifest:
        with open(args.manifest) as fh:
            data = json.load(fh)
        G = graph_from_manifest(data)
        claimed = data.get("mu_certified")
        target = args.mu_target if args.mu_target is not None else claimed
    else:
        if args.n is None or args.d is None:
            raise UsageError("expander-cert needs --manifest or both --n and --d")
        G = build_expander(args.n, args.d, args.mu_target)
        target = args.mu_target
    mu = certify_mu(G)
    out = {"schema": 1, **G.with_mu(mu).manifest(), "mu_target": target}
    ok = target is None or mu <= target + 1e-8
    return out, ok


def cmd_perm_gap(args):
    report = check_perm_gap(args.n, args.k)
    return [report], report.passed


COMMANDS = {
    "sample": cmd_sample,
    "build": cmd_build,
    "enumerate": cmd_enumerate,
    "verify": cmd_verify,
    "expander-cert": cmd_expander_cert,
    "perm-gap": cmd_perm_gap,
}


def _render(result, args, elapsed_ms):
    if isinstance(result, list):
        if args.format == "table":
            return "".join(r.line() + "\n" for r in result)
        return "".join(json.dumps(r.to_dict(args.timing), sort_keys=False, default=str) + "\n" for r in result)
    if "schema" not in result:
        result = {"schema": 1, **result}
    if args.timing:
        result = {**result, "runtime_ms": elapsed_ms}
    if args.format == "table":
        return "".join(f"{k}: {v}\n" for k, v in result.items())
    return json.dumps(result, default=str) + "\n"


def _error(code, message):
    sys.stderr.write(json.dumps({"schema": 1, "code": code, "message": message}) + "\n")


def run(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        caps = parse_caps(args.caps, current_caps())
    except UsageError as exc:
        _error("usage", str(exc))
        return EXIT_USAGE
    except ValueError as exc:
        _error("usage", str(exc))
        return EXIT_USAGE
    start = time.perf_counter()
    try:
        with use_caps(caps):
            result, ok = COMMANDS[args.command](args)
    except UsageError as exc:
        _error("usage", str(exc))
        return EXIT_USAGE
    except DesignForgeError as exc:
        _error(exc.code, str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _error("io", str(exc))
        return EXIT_USAGE
    text = _render(result, args, (time.perf_counter() - start) * 1e3)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


def main():
    sys.exit(run())
