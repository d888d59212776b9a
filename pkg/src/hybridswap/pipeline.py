"""Config-driven experiment runner.

Each run reads one INI-style config file, executes one experiment
(`swap`, `scan`, `postselect`, `tomo`, `chsh`, `teleport`, `compare`) and
writes machine-readable CSV/JSON artifacts plus a manifest into its own
output directory. Reruns with the same config and seed are byte-identical.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ChannelSpec, apply_channel
from .fock import FockDensityMatrix, InvariantViolation, occupations, state_fidelity, to_json_dict
from .negativity import DEFAULT_GAIN_GRID, gain_scan, log_negativity, scan_to_csv
from .postselect import (
    chsh_correlation,
    chsh_correlation_projective,
    chsh_s,
    chsh_s_closed_form,
    extract_qubit_block,
    mc_average_fidelity,
    summarize,
    teleport_qubit,
    xy_weights,
)
from .reference import compare_to_reference
from .states import SplitPhotonSpec, StateImpurity, split_photon
from .tomography import mle_reconstruct, phase_schedule, sample_homodyne

EXPERIMENTS = ("swap", "scan", "postselect", "tomo", "chsh", "teleport", "compare")


class ConfigError(Exception):
    """Invalid or inconsistent run configuration (exit code 2)."""


class ConvergenceError(Exception):
    """An iterative solver failed to converge (exit code 4)."""


@dataclass
class RunConfig:
    experiment: str
    out_dir: Path
    seed: int
    config_path: Path | None = None
    config_text: str = ""
    initial: SplitPhotonSpec = field(default_factory=lambda: SplitPhotonSpec(0.5))
    cutoff: int = 5
    channel: ChannelSpec = field(default_factory=lambda: ChannelSpec(0.71))
    scan_r_values: tuple[float, ...] = (0.0, 0.71, 1.01)
    scan_g_values: tuple[float, ...] = DEFAULT_GAIN_GRID
    tomo_n_samples: int = 100_000
    tomo_phases: int = 12
    tomo_cutoff: int = 3
    tomo_max_iter: int = 2000
    tomo_tol: float = 1e-7
    tomo_bins: int = 201
    chsh_angle_points: int = 10
    teleport_n_bloch: int = 100_000
    compare_dataset: str = "R0.50"
    compare_fit: bool = True


def _locate_line(text: str, section: str, key: str | None) -> int | None:
    """Best-effort line number of `key` inside `[section]` for error messages."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if key is None and current == section:
                return lineno
        elif current == section and key is not None and stripped and not stripped.startswith(("#", ";")):
            name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return lineno
    return None


def _fail(cfg_path: Path | None, text: str, section: str, key: str | None, message: str):
    line = _locate_line(text, section, key)
    place = f"{cfg_path}" if cfg_path else "<config>"
    if line is not None:
        place = f"{place}:{line}"
    where = f"[{section}]" + (f" {key}" if key else "")
    raise ConfigError(f"{place}: {where}: {message}")


def _get(parser, cfg_path, text, section, key, conv, default, check=None, describe=""):
    if not parser.has_section(section) or not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        value = conv(raw)
    except ValueError:
        _fail(cfg_path, text, section, key, f"cannot parse {raw!r} ({describe or conv.__name__})")
    if check is not None and not check(value):
        _fail(cfg_path, text, section, key, f"value {value!r} out of range ({describe})")
    return value


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def load_config(path, *, experiment: str | None = None,
                seed: int | None = None, out_dir=None) -> RunConfig:
    """Parse and validate a run configuration file.

    `experiment`, `seed` and `out_dir` override the corresponding config
    entries (command-line precedence).
    """
    cfg_path = Path(path)
    try:
        text = cfg_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {cfg_path}: {exc}") from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(cfg_path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    exp = experiment or _get(parser, cfg_path, text, "run", "experiment", str, None)
    if exp is None:
        _fail(cfg_path, text, "run", "experiment", "experiment id required")
    if exp not in EXPERIMENTS:
        _fail(cfg_path, text, "run", "experiment",
              f"unknown experiment {exp!r}; choose from {EXPERIMENTS}")
    out = Path(out_dir) if out_dir is not None else Path(
        _get(parser, cfg_path, text, "run", "out", str, f"runs/{exp}")
    )
    run_seed = seed if seed is not None else _get(
        parser, cfg_path, text, "run", "seed", int, 0, describe="integer seed"
    )

    reflectivity = _get(parser, cfg_path, text, "initial_state", "reflectivity", float, 0.5,
                        check=lambda v: 0.0 <= v <= 1.0, describe="in [0, 1]")
    cutoff = _get(parser, cfg_path, text, "initial_state", "cutoff", int, 5,
                  check=lambda v: 1 <= v <= 20, describe="integer in [1, 20]")
    weights = {}
    for key in ("weight_ideal", "weight_vacuum", "weight_multiphoton"):
        weights[key] = _get(parser, cfg_path, text, "initial_state", key, float, None,
                            check=lambda v: v >= 0.0, describe=">= 0")
    given = [v for v in weights.values() if v is not None]
    if given and len(given) != 3:
        _fail(cfg_path, text, "initial_state", "weight_ideal",
              "give all three impurity weights or none")
    impurity = None
    if given:
        try:
            impurity = StateImpurity(**{k: float(v) for k, v in weights.items()})
        except ValueError as exc:
            _fail(cfg_path, text, "initial_state", "weight_ideal", str(exc))
    try:
        initial = SplitPhotonSpec(reflectivity, impurity)
    except ValueError as exc:
        _fail(cfg_path, text, "initial_state", "reflectivity", str(exc))

    r = _get(parser, cfg_path, text, "channel", "r", float, 0.71,
             check=lambda v: v >= 0.0, describe=">= 0")
    raw_g = _get(parser, cfg_path, text, "channel", "g", str, "optimal")
    if raw_g.strip().lower() == "optimal":
        gain = None
    else:
        try:
            gain = float(raw_g)
        except ValueError:
            _fail(cfg_path, text, "channel", "g", f"expected a number or 'optimal', got {raw_g!r}")
        if gain < 0:
            _fail(cfg_path, text, "channel", "g", "gain must be >= 0")
    kwargs = {}
    for key in ("pre_loss", "post_loss", "bsm_efficiency"):
        kwargs[key] = _get(parser, cfg_path, text, "channel", key, float, 1.0,
                           check=lambda v: 0.0 < v <= 1.0, describe="in (0, 1]")
    kwargs["dephasing"] = _get(parser, cfg_path, text, "channel", "dephasing", float, 1.0,
                               check=lambda v: 0.0 <= v <= 1.0, describe="in [0, 1]")
    channel = ChannelSpec(squeezing=r, gain=gain, **kwargs)

    g_min = _get(parser, cfg_path, text, "scan", "g_min", float, 0.0)
    g_max = _get(parser, cfg_path, text, "scan", "g_max", float, 1.2)
    g_points = _get(parser, cfg_path, text, "scan", "g_points", int, 21,
                    check=lambda v: v >= 2, describe=">= 2")
    if g_max <= g_min:
        _fail(cfg_path, text, "scan", "g_max", "g_max must exceed g_min")

    config = RunConfig(
        experiment=exp,
        out_dir=out,
        seed=int(run_seed),
        config_path=cfg_path,
        config_text=text,
        initial=initial,
        cutoff=cutoff,
        channel=channel,
        scan_r_values=_get(parser, cfg_path, text, "scan", "r_values", _parse_float_list,
                           (0.0, 0.71, 1.01)),
        scan_g_values=tuple(np.linspace(g_min, g_max, g_points)),
        tomo_n_samples=_get(parser, cfg_path, text, "tomography", "n_samples", int, 100_000,
                            check=lambda v: v >= 1, describe=">= 1"),
        tomo_phases=_get(parser, cfg_path, text, "tomography", "phases", int, 12,
                         check=lambda v: v >= 1, describe=">= 1"),
        tomo_cutoff=_get(parser, cfg_path, text, "tomography", "cutoff", int, 3,
                         check=lambda v: 1 <= v <= 8, describe="integer in [1, 8]"),
        tomo_max_iter=_get(parser, cfg_path, text, "tomography", "max_iter", int, 2000,
                           check=lambda v: v >= 1, describe=">= 1"),
        tomo_tol=_get(parser, cfg_path, text, "tomography", "tol", float, 1e-7,
                      check=lambda v: v > 0, describe="> 0"),
        tomo_bins=_get(parser, cfg_path, text, "tomography", "bins", int, 201,
                       check=lambda v: v >= 11, describe=">= 11"),
        chsh_angle_points=_get(parser, cfg_path, text, "chsh", "angle_points", int, 10,
                               check=lambda v: v >= 2, describe=">= 2"),
        teleport_n_bloch=_get(parser, cfg_path, text, "teleport", "n_bloch", int, 100_000,
                              check=lambda v: v >= 1, describe=">= 1"),
        compare_dataset=_get(parser, cfg_path, text, "compare", "dataset", str, "R0.50",
                             check=lambda v: v in ("R0.50", "R0.67"), describe="R0.50 or R0.67"),
        compare_fit=_get(parser, cfg_path, text, "compare", "fit", _parse_bool, True),
    )
    return config


def _json_bytes(payload) -> bytes:
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _density_elements_csv(rho: FockDensityMatrix) -> str:
    """Bar-plot-ready |element| listing with photon-number labels."""
    occs = occupations(rho.modes, rho.cutoff)
    labels = ["|" + ",".join(str(n) for n in occ) + ">" for occ in occs]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "col", "abs", "real", "imag"])
    for i, row_label in enumerate(labels):
        for j, col_label in enumerate(labels):
            z = rho.data[i, j]
            writer.writerow([row_label, col_label, repr(abs(z)), repr(z.real), repr(z.imag)])
    return buf.getvalue()


def _negativity_json(rho: FockDensityMatrix) -> dict:
    return asdict(log_negativity(rho, part=[0]))


def _swapped_state(config: RunConfig) -> tuple[FockDensityMatrix, FockDensityMatrix]:
    initial = split_photon(config.initial, cutoff=config.cutoff)
    swapped = apply_channel(initial, 1, config.channel, trace_tol=1e-6)
    return initial, swapped


def _run_swap(config: RunConfig, files: dict[str, bytes]) -> None:
    initial, swapped = _swapped_state(config)
    initial.validate()
    swapped.validate()
    files["initial_state.json"] = _json_bytes(to_json_dict(initial))
    files["swapped_state.json"] = _json_bytes(to_json_dict(swapped))
    files["initial_density_elements.csv"] = _density_elements_csv(initial).encode()
    files["swapped_density_elements.csv"] = _density_elements_csv(swapped).encode()
    files["negativity.json"] = _json_bytes(
        {"initial": _negativity_json(initial), "swapped": _negativity_json(swapped)}
    )


def _run_scan(config: RunConfig, files: dict[str, bytes]) -> None:
    rows = gain_scan(
        config.initial.reflectivity,
        config.initial.impurity,
        config.scan_r_values,
        config.scan_g_values,
        pre_loss=config.channel.pre_loss,
        post_loss=config.channel.post_loss,
        bsm_efficiency=config.channel.bsm_efficiency,
        dephasing=config.channel.dephasing,
        cutoff=config.cutoff,
    )
    files["gain_scan.csv"] = scan_to_csv(rows).encode()


def _run_postselect(config: RunConfig, files: dict[str, bytes]) -> None:
    _, swapped = _swapped_state(config)
    swapped.validate()
    summary = summarize(swapped)
    summary.rho_ps.validate()
    files["postselect_summary.json"] = _json_bytes(summary.to_json_dict())


def _run_tomo(config: RunConfig, files: dict[str, bytes]) -> bool:
    _, swapped = _swapped_state(config)
    truth = swapped
    schedule = phase_schedule(config.tomo_phases)
    source = (
        f"swap(R={config.initial.reflectivity}, r={config.channel.squeezing}, "
        f"g={config.channel.effective_gain})"
    )
    dataset = sample_homodyne(truth, schedule, config.tomo_n_samples, config.seed, source=source)
    files["dataset.csv"] = dataset.to_csv().encode()
    files["dataset.json"] = _json_bytes(dataset.sidecar())
    rho_hat, diag = mle_reconstruct(
        dataset,
        cutoff=config.tomo_cutoff,
        max_iter=config.tomo_max_iter,
        tol=config.tomo_tol,
        n_bins=config.tomo_bins,
    )
    rho_hat.validate()
    files["reconstruction.json"] = _json_bytes(to_json_dict(rho_hat))
    diag_payload = diag.to_json_dict()
    if truth.cutoff == rho_hat.cutoff:
        diag_payload["fidelity_to_truth"] = state_fidelity(truth, rho_hat)
    files["diagnostics.json"] = _json_bytes(diag_payload)
    return diag.converged


def _run_chsh(config: RunConfig, files: dict[str, bytes]) -> None:
    _, swapped = _swapped_state(config)
    block = extract_qubit_block(swapped)
    x, y, p = xy_weights(block)
    angles = np.linspace(0.0, math.pi, config.chsh_angle_points)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta_a", "theta_d", "correlation", "correlation_projective"])
    for ta in angles:
        for td in angles:
            writer.writerow([
                repr(float(ta)), repr(float(td)),
                repr(chsh_correlation(block, ta, td)),
                repr(chsh_correlation_projective(block, ta, td)),
            ])
    files["chsh_correlations.csv"] = buf.getvalue().encode()
    files["chsh.json"] = _json_bytes(
        {
            "S": chsh_s(block),
            "S_closed_form": chsh_s_closed_form(block),
            "x": x,
            "y": y,
            "P": p,
        }
    )


def _run_teleport(config: RunConfig, files: dict[str, bytes]) -> None:
    _, swapped = _swapped_state(config)
    block = extract_qubit_block(swapped)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bloch_polar", "fidelity"])
    for theta in np.linspace(0.0, math.pi, 25):
        alpha = math.cos(theta / 2.0)
        beta = math.sin(theta / 2.0)
        _, fid, _ = teleport_qubit(block, alpha, beta)
        writer.writerow([repr(float(theta)), repr(fid)])
    files["teleport_fidelity.csv"] = buf.getvalue().encode()
    mc_mean, mc_err = mc_average_fidelity(block, config.teleport_n_bloch, seed=config.seed)
    x, y, p = xy_weights(block)
    files["teleport.json"] = _json_bytes(
        {
            "F_av": (1.0 + x + y) / 3.0,
            "F_av_mc": mc_mean,
            "F_av_mc_stderr": mc_err,
            "success_probability": p / 4.0,
        }
    )


def _run_compare(config: RunConfig, files: dict[str, bytes]) -> None:
    report = compare_to_reference(config.compare_dataset, fit=config.compare_fit)
    files["comparison.json"] = _json_bytes(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["quantity", "operating_point", "reference", "uncertainty",
                     "model", "status", "fitted"])
    for row in report["rows"]:
        writer.writerow([
            row["quantity"], row["operating_point"], repr(row["reference"]),
            repr(row["uncertainty"]), repr(row["model"]), row["status"], row["fitted"],
        ])
    files["comparison.csv"] = buf.getvalue().encode()


def run(config: RunConfig) -> Path:
    """Execute one experiment; returns the output directory.

    Raises ConfigError / InvariantViolation / ConvergenceError for the
    documented exit codes.
    """
    files: dict[str, bytes] = {}
    converged = True
    if config.experiment == "swap":
        _run_swap(config, files)
    elif config.experiment == "scan":
        _run_scan(config, files)
    elif config.experiment == "postselect":
        _run_postselect(config, files)
    elif config.experiment == "tomo":
        converged = _run_tomo(config, files)
    elif config.experiment == "chsh":
        _run_chsh(config, files)
    elif config.experiment == "teleport":
        _run_teleport(config, files)
    elif config.experiment == "compare":
        _run_compare(config, files)
    else:
        raise ConfigError(f"unknown experiment {config.experiment!r}")

    manifest = {
        "tool": "hybridswap",
        "version": __version__,
        "experiment": config.experiment,
        "seed": config.seed,
        "config_sha256": hashlib.sha256(config.config_text.encode("utf-8")).hexdigest(),
        "files": sorted(files),
    }
    files["manifest.json"] = _json_bytes(manifest)

    config.out_dir.mkdir(parents=True, exist_ok=True)
    for name, payload in sorted(files.items()):
        (config.out_dir / name).write_bytes(payload)
    if not converged:
        raise ConvergenceError(
            "maximum-likelihood reconstruction did not converge "
            f"(see {config.out_dir / 'diagnostics.json'})"
        )
    return config.out_dir
