"""End to end: run a bundled experiment and read back its report.

The same run is available as ``midec run --preset proximal_gaussian``.
"""
import tempfile
from pathlib import Path

from midec.harness import load_preset, parse_config, read_csv, run_experiment

raw = load_preset("proximal_gaussian")
raw["chain"]["n_chains"] = 20_000  # keep the demo quick
with tempfile.TemporaryDirectory() as tmp:
    report, status = run_experiment(parse_config(raw), out_dir=tmp)
    print((Path(tmp) / "summary.json").read_text())
    back = read_csv(Path(tmp) / "report.csv")

print(f"{'k':>3} {'exact':>10} {'empirical':>10} {'theorem':>10} {'sharp':>10} {'coeff':>7}")
for i, k in enumerate(back.index[:8]):
    print(f"{k:>3} {back.exact_mi[i]:10.3e} {back.empirical_mi[i]:10.3e} {back.thm_bound[i]:10.3e}"
          f" {back.thm_bound_sharp[i]:10.3e} {back.contraction_coeff[i]:7.4f}")
print("exit status:", status)
