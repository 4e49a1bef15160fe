"""Config-driven experiments: run chains, evaluate oracles and bounds, verify.

An experiment is a single JSON document (see ``CONFIG_SCHEMA`` and the
bundled presets).  :func:`run_experiment` resolves it into a plan, fills a
:class:`~midec.bounds.BoundReport`, checks dominance and writes
``report.csv`` and ``summary.json`` to the output directory.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import bounds as B
from .errors import ConfigError, DomainError, MidecError
from .estimation import bootstrap_weights, empirical_cov_opnorm, joint_gaussian_fit, mi_plugin_gaussian
from .gaussian_oracle import chain_gain, linear_gaussian_joint
from .phi import get_generator, phi_mutual_info_gaussian
from .samplers import ChainConfig, run_chain_pairs
from .targets import GaussianDist, builtin_potential, gaussian_potential

__all__ = [
    "CONFIG_SCHEMA",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "run_experiment",
    "verify_dominance",
    "write_csv",
    "read_csv",
    "format_float",
    "list_presets",
    "load_preset",
]

_VECTOR = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_MATRIX = {"type": "array", "items": _VECTOR, "minItems": 1}
_GRID = {
    "oneOf": [
        {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        {
            "type": "object",
            "properties": {
                "start": {"type": "integer", "minimum": 0},
                "stop": {"type": "integer", "minimum": 0},
                "step": {"type": "integer", "minimum": 1},
            },
            "required": ["start", "stop"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "target": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["gaussian", "builtin"]},
                "mean": _VECTOR,
                "covariance": {"oneOf": [_MATRIX, {"type": "number", "exclusiveMinimum": 0}]},
                "name": {"type": "string"},
                "dim": {"type": "integer", "minimum": 1},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "chain": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["langevin", "langevin_em", "ula", "proximal"]},
                "eta": {"type": "number", "exclusiveMinimum": 0},
                "record_indices": _GRID,
                "n_chains": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "init": {
                    "type": "object",
                    "properties": {
                        "mean": _VECTOR,
                        "covariance": {"oneOf": [_MATRIX, {"type": "number", "minimum": 0}]},
                    },
                    "required": ["mean", "covariance"],
                    "additionalProperties": False,
                },
                "em_substep": {"type": "number", "exclusiveMinimum": 0},
                "rgo": {"enum": ["auto", "exact", "rejection"]},
                "exact_gaussian": {"type": "boolean"},
            },
            "required": ["kind", "eta", "record_indices", "init"],
            "additionalProperties": False,
        },
        "generator": {"enum": ["kl", "chi2", "hellinger2", "reverse-kl", "reverse-chi2", "tv"]},
        "reference": {
            "type": "object",
            "properties": {"index": {"type": "integer", "minimum": 0}},
            "required": ["index"],
            "additionalProperties": False,
        },
        "bounds": {
            "type": "object",
            "properties": {k: {"type": "boolean"} for k in ("theorem", "sharp", "regularity", "covariance")},
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}},
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "mc_sigma": {"type": "number", "minimum": 0},
                "dominance_slack": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "bootstrap": {
            "type": "object",
            "properties": {
                "replicates": {"type": "integer", "minimum": 10},
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "test_hooks": {
            "type": "object",
            "properties": {"thm_bound_scale": {"type": "number", "minimum": 0}},
            "additionalProperties": False,
        },
    },
    "required": ["target", "chain", "reference"],
    "additionalProperties": False,
}


@dataclass
class ExperimentConfig:
    """A fully resolved experiment plan."""

    name: str
    gaussian_target: Optional[GaussianDist]
    potential: object
    chain: ChainConfig
    generator: str
    reference: int
    flags: dict
    out_dir: Optional[Path]
    mc_sigma: float
    slack: float
    n_boot: int
    boot_seed: int
    thm_scale: float
    raw: dict


def _path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def _matrix(value, d):
    a = np.asarray(value, dtype=float)
    return a * np.eye(d) if a.ndim == 0 else a


def _grid(g):
    if isinstance(g, list):
        return g
    return list(range(g["start"], g["stop"] + 1, g.get("step", 1)))


def parse_config(raw: dict, base_dir: Optional[Path] = None) -> ExperimentConfig:
    """Validate ``raw`` and resolve it into an :class:`ExperimentConfig`.

    Raises :class:`ConfigError` naming the offending field.
    """
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigError(f"config field {_path(e)}: {e.message}") from None

    def fail(field, msg):
        raise ConfigError(f"config field {field}: {msg}")

    t = raw["target"]
    gauss = None
    try:
        if t["kind"] == "gaussian":
            if "mean" not in t or "covariance" not in t:
                fail("target", "gaussian targets need mean and covariance")
            mean = np.asarray(t["mean"], dtype=float)
            gauss = GaussianDist(mean, _matrix(t["covariance"], len(mean)))
            pot = gaussian_potential(gauss)
        else:
            if "name" not in t:
                fail("target.name", "builtin targets need a name")
            pot = builtin_potential(t["name"], t.get("dim", 1), t.get("alpha", 1.0))
    except DomainError as e:
        fail("target", str(e))

    c = raw["chain"]
    try:
        init_mean = np.asarray(c["init"]["mean"], dtype=float)
        init = GaussianDist(init_mean, _matrix(c["init"]["covariance"], len(init_mean)))
    except DomainError as e:
        fail("chain.init", str(e))
    if init.dim != pot.dim:
        fail("chain.init", f"dimension {init.dim} does not match target dimension {pot.dim}")
    indices = _grid(c["record_indices"])
    try:
        chain = ChainConfig(
            chain_kind=c["kind"],
            eta=c["eta"],
            record_indices=indices,
            n_chains=max(c.get("n_chains", 0), 1),
            seed=c.get("seed", 0),
            init=init,
            em_substep=c.get("em_substep"),
            exact_gaussian=c.get("exact_gaussian", True),
            rgo=c.get("rgo", "auto"),
        )
    except DomainError as e:
        fail("chain", str(e))
    n_chains = c.get("n_chains", 0)

    alpha, L = pot.alpha, pot.smoothness
    if chain.chain_kind == "ula":
        if L is not None and chain.eta > 1.0 / L * (1 + 1e-12):
            fail("chain.eta", f"ULA needs eta <= 1/L = {1.0 / L:g}")
        if alpha * chain.eta >= 1:
            fail("chain.eta", "ULA bounds need alpha * eta < 1")
    if chain.chain_kind == "proximal" and gauss is None:
        if L is None or chain.eta >= 1.0 / L:
            fail("chain.eta", "proximal on a non-Gaussian target needs eta < 1/L")
    if chain.chain_kind == "langevin_em" and n_chains > 0 and not (gauss is not None and chain.exact_gaussian):
        if chain.em_substep is None:
            fail("chain.em_substep", "required for Euler-Maruyama simulation")

    gen = raw.get("generator", "kl")
    gobj = get_generator(gen)
    if not gobj.smooth:
        fail("generator", "bounds need a twice differentiable generator")
    if gauss is None and gen != "kl":
        fail("generator", "non-Gaussian targets are supported only with kl")
    if gauss is not None and gen != "kl" and pot.dim != 1:
        fail("generator", f"{gen} mutual information is only available for d = 1")

    ref = raw["reference"]["index"]
    if ref not in indices:
        fail("reference.index", "must be one of the record indices")
    if gauss is None and ref < 1:
        fail("reference.index", "non-Gaussian targets need a reference index >= 1 (regularity bound)")

    flags = {"theorem": True, "sharp": True, "regularity": True, "covariance": True}
    flags.update(raw.get("bounds", {}))
    tol = raw.get("tolerances", {})
    out = raw.get("output", {}).get("dir")
    out_dir = None
    if out is not None:
        out_dir = Path(out)
        if not out_dir.is_absolute() and base_dir is not None:
            out_dir = base_dir / out_dir
    boot = raw.get("bootstrap", {})
    return ExperimentConfig(
        name=raw.get("name", "experiment"),
        gaussian_target=gauss,
        potential=pot,
        chain=chain,
        generator=gen,
        reference=ref,
        flags=flags,
        out_dir=out_dir,
        mc_sigma=float(tol.get("mc_sigma", 4.0)),
        slack=float(tol.get("dominance_slack", 1e-9)),
        n_boot=int(boot.get("replicates", 200)),
        boot_seed=int(boot.get("seed", chain.seed)),
        thm_scale=float(raw.get("test_hooks", {}).get("thm_bound_scale", 1.0)),
        raw={**raw, "chain": {**c, "n_chains": n_chains}},
    )


def load_config(path) -> ExperimentConfig:
    """Read and parse a JSON config file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
    return parse_config(raw, base_dir=Path.cwd())


# -- presets -------------------------------------------------------------------


def _preset_dir():
    return resources.files("midec") / "presets"


def list_presets():
    """Names of bundled preset configs."""
    return sorted(p.name[:-5] for p in _preset_dir().iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    f = _preset_dir() / f"{name}.json"
    if not f.is_file():
        raise ConfigError(f"unknown preset {name!r}; known: {list_presets()}")
    return json.loads(f.read_text())


# -- oracle joint for (possibly anisotropic) Gaussian targets ---------------------


def _gaussian_joint(cfg: ExperimentConfig, k: int):
    g = cfg.gaussian_target
    lam, u = np.linalg.eigh(g.covariance)
    kind = "langevin" if cfg.chain.chain_kind == "langevin_em" else cfg.chain.chain_kind
    gains = np.array([chain_gain(kind, 1.0 / lv, cfg.chain.eta, k) for lv in lam])
    a = (u * gains[:, 0]) @ u.T
    q = (u * gains[:, 1]) @ u.T
    return linear_gaussian_joint(cfg.chain.init, a, q, offset=g.mean - a @ g.mean)


def _exact_mi(cfg, k):
    j = _gaussian_joint(cfg, k)
    if k == 0:
        return j, (math.inf if np.any(j.cov0) else 0.0)
    return j, phi_mutual_info_gaussian(j, cfg.generator)


# -- Sobolev trajectory and bounds ----------------------------------------------------


def _alpha0(init: GaussianDist):
    lmax = float(np.linalg.eigvalsh(init.covariance)[-1])
    return math.inf if lmax <= 0 else 1.0 / lmax


def _sobolev_trajectory(cfg, kmax):
    """Certified constants ``alpha_k`` for every integer step (or grid time)."""
    ch = cfg.chain
    alpha = cfg.potential.alpha
    a0 = _alpha0(ch.init)
    out = [a0]
    for k in range(1, kmax + 1):
        prev = out[-1]
        if ch.chain_kind == "ula":
            out.append(float(B.sobolev_evolution_ula(prev, 1 - ch.eta * alpha, ch.eta)))
        elif ch.chain_kind == "proximal":
            out.append(float(B.sobolev_evolution_proximal(alpha, prev, ch.eta)))
        else:
            out.append(float(B.sobolev_evolution_langevin(alpha, a0, k * ch.eta)))
    return out


def _step_coeff(cfg, alpha_prev):
    ch = cfg.chain
    alpha = cfg.potential.alpha
    if ch.chain_kind == "ula":
        return B.contraction_ula(1 - ch.eta * alpha, ch.eta, alpha_prev)
    if ch.chain_kind == "proximal":
        return B.contraction_proximal(alpha, ch.eta, alpha_prev)
    return B.contraction_langevin(alpha, alpha_prev, ch.eta)


def _thm_bound(cfg, alpha_ref, mi_ref, k):
    ch = cfg.chain
    alpha = cfg.potential.alpha
    steps = k - cfg.reference
    if ch.chain_kind == "ula":
        return B.bound_mi_ula(alpha, ch.eta, alpha_ref, mi_ref, steps)
    if ch.chain_kind == "proximal":
        return B.bound_mi_proximal(alpha, ch.eta, alpha_ref, mi_ref, steps)
    return B.bound_mi_langevin(alpha, alpha_ref, mi_ref, steps * ch.eta)


def _regularity(cfg, traj, k):
    if k < 1 or cfg.generator != "kl":
        return None
    ch = cfg.chain
    alpha = cfg.potential.alpha
    var0 = float(np.trace(ch.init.covariance))
    if ch.chain_kind == "ula":
        return B.bound_mi_regularity_ula(alpha, ch.eta, k, var0)
    if ch.chain_kind == "proximal":
        return B.bound_mi_regularity_proximal(alpha, ch.eta, k, var0, traj[1])
    return B.bound_mi_regularity_ld(alpha, k * ch.eta, var0)


# -- verification ----------------------------------------------------------------------


def _num(x):
    return x is not None and not (isinstance(x, float) and math.isnan(x))


def verify_dominance(report: B.BoundReport, mc_sigma: float = 4.0, slack: float = 1e-9, check_empirical=True):
    """List ``(index, kind, margin)`` for every bound the data exceeds.

    Kinds: ``exact>thm``, ``exact>thm_sharp``, ``exact>regularity``,
    ``empirical>thm`` (empirical minus ``mc_sigma`` half-widths), ``cov``.
    ``margin`` is by how much the bound is exceeded.
    """
    out = []
    for i, k in enumerate(report.index):
        ex = report.exact_mi[i]
        for col, kind in (("thm_bound", "exact>thm"), ("thm_bound_sharp", "exact>thm_sharp"), ("regularity_bound", "exact>regularity")):
            b = report.value(col, i)
            if _num(ex) and _num(b) and ex > b + slack:
                out.append((k, kind, ex - b))
        emp, ci, thm = report.empirical_mi[i], report.ci_halfwidth[i], report.thm_bound[i]
        if check_empirical and _num(emp) and _num(ci) and _num(thm) and not math.isinf(ci):
            if emp - mc_sigma * ci > thm:
                out.append((k, "empirical>thm", emp - mc_sigma * ci - thm))
        co, cb = report.cov_opnorm[i], report.cov_bound[i]
        allow = report.flags.get("cov_allowance", [0.0] * len(report.index))[i] or 0.0
        if _num(co) and _num(cb) and co > cb + slack + mc_sigma * allow:
            out.append((k, "cov", co - cb))
    return out


# -- serialisation -----------------------------------------------------------------------


def format_float(x) -> str:
    """17 significant digits; ``inf`` literal; empty for missing values."""
    if x is None:
        return ""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def write_csv(report: B.BoundReport, path) -> None:
    lines = [",".join(B.BoundReport.COLUMNS)]
    for row in report.rows():
        cells = [str(int(row[0]))] + [format_float(v) for v in row[1:]]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> B.BoundReport:
    """Parse a ``report.csv`` back into a :class:`BoundReport`."""
    text = Path(path).read_text().splitlines()
    header = text[0].split(",")
    if tuple(header) != B.BoundReport.COLUMNS:
        raise ValueError("unexpected CSV header")
    cols = {h: [] for h in header}
    for line in text[1:]:
        for h, cell in zip(header, line.split(",")):
            cols[h].append(None if cell == "" else float(cell))
    cols["index"] = [int(v) for v in cols["index"]]
    return B.BoundReport(**cols)


# -- main entry ----------------------------------------------------------------------------


def run_experiment(config, out_dir=None):
    """Run an experiment and return ``(report, exit_status)``.

    ``config`` is an :class:`ExperimentConfig`, a dict or a path.  Exit status
    is 0 when no violations were recorded and 1 otherwise.  Files are written
    only when an output directory is known.
    """
    if isinstance(config, (str, Path)):
        cfg = load_config(config)
    elif isinstance(config, dict):
        cfg = parse_config(config)
    else:
        cfg = config
    if out_dir is not None:
        cfg.out_dir = Path(out_dir)

    ch = cfg.chain
    idx = list(ch.record_indices)
    n = len(idx)
    kmax = idx[-1]
    gauss = cfg.gaussian_target is not None
    alpha = cfg.potential.alpha
    traj = _sobolev_trajectory(cfg, max(kmax, 1))

    exact = [None] * n
    joints = [None] * n
    if gauss:
        for i, k in enumerate(idx):
            joints[i], exact[i] = _exact_mi(cfg, k)

    ell = cfg.reference
    i_ref = idx.index(ell)
    if gauss:
        mi_ref = exact[i_ref]
    else:
        mi_ref = _regularity(cfg, traj, ell)

    report = B.BoundReport(index=idx, time=list(ch.times()), exact_mi=list(exact))
    report.flags["empirical"] = "exact-in-law" if gauss else "heuristic"
    report.flags["mi_reference"] = "exact" if gauss else "regularity_bound"

    # sharp bound: product of per-step coefficients from ell onwards
    log_prod = {ell: 0.0}
    acc = 0.0
    for k in range(ell, kmax):
        c = _step_coeff(cfg, traj[k])
        acc += math.log(c) if c > 0 else -math.inf
        log_prod[k + 1] = acc

    for i, k in enumerate(idx):
        report.sobolev_lower[i] = traj[k]
        report.contraction_coeff[i] = 1.0 if k == 0 else _step_coeff(cfg, traj[k - 1])
        if k >= ell and mi_ref is not None:
            if cfg.flags["theorem"]:
                report.thm_bound[i] = _thm_bound(cfg, traj[ell], mi_ref, k) * cfg.thm_scale
            if cfg.flags["sharp"]:
                if ch.chain_kind == "langevin_em":
                    sharp = B.bound_mi_langevin_sharp(alpha, traj[ell], mi_ref, (k - ell) * ch.eta)
                else:
                    sharp = 0.0 if mi_ref == 0 else mi_ref * math.exp(log_prod[k])
                report.thm_bound_sharp[i] = sharp
        if cfg.flags["regularity"]:
            report.regularity_bound[i] = _regularity(cfg, traj, k)

    # empirical side
    n_chains = cfg.raw["chain"].get("n_chains", 0)
    allowance = [0.0] * n
    if n_chains > 0:
        sample = run_chain_pairs(ch, cfg.gaussian_target if gauss else cfg.potential)
        report.oracle_call_count = sample.oracle_call_count
        weights = bootstrap_weights(sample.n_chains, cfg.n_boot, cfg.boot_seed) if cfg.generator == "kl" else None
        for i, k in enumerate(idx):
            fit = joint_gaussian_fit(sample, k)
            if cfg.generator == "kl":
                report.empirical_mi[i], report.ci_halfwidth[i] = mi_plugin_gaussian(fit, weights=weights)
            if not gauss:
                joints[i] = fit
                sd0 = np.sqrt(np.diag(fit.cov0))
                sdk = np.sqrt(np.diag(fit.covk))
                allowance[i] = float(np.max(np.outer(sd0, sdk))) * math.sqrt(2.0 / sample.n_chains)
    report.flags["cov_allowance"] = allowance

    if cfg.flags["covariance"] and cfg.generator == "kl":
        for i, k in enumerate(idx):
            j = joints[i]
            if j is None:
                continue
            mi = exact[i] if gauss else next(
                (v for v in (report.thm_bound[i], report.regularity_bound[i]) if v is not None), None
            )
            if mi is None:
                continue
            report.cov_opnorm[i] = empirical_cov_opnorm(j)
            var0 = float(np.linalg.eigvalsh(j.cov0)[-1])
            xi = math.sqrt(float(np.linalg.eigvalsh(j.covk)[-1]))
            report.cov_bound[i] = math.inf if math.isinf(mi) else B.bound_cov_from_mi(mi, var0, xi)

    report.violations = verify_dominance(report, cfg.mc_sigma, cfg.slack, check_empirical=gauss)
    status = 1 if report.violations else 0
    if cfg.out_dir is not None:
        _write_outputs(cfg, report, status)
    return report, status


def _write_outputs(cfg, report, status):
    try:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(report, cfg.out_dir / "report.csv")
        summary = {
            "name": cfg.name,
            "chain": cfg.chain.chain_kind,
            "generator": cfg.generator,
            "reference_index": cfg.reference,
            "n_chains": cfg.raw["chain"].get("n_chains", 0),
            "seed": cfg.chain.seed,
            "oracle_call_count": report.oracle_call_count,
            "empirical_mi": report.flags["empirical"],
            "mi_reference": report.flags["mi_reference"],
            "violations": [{"index": k, "kind": kind, "margin": format_float(m)} for k, kind, m in report.violations],
            "n_violations": len(report.violations),
            "exit_status": status,
        }
        (cfg.out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    except OSError as e:
        raise MidecError(f"cannot write outputs to {cfg.out_dir}: {e}") from None
