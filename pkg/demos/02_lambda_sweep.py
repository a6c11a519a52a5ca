"""Sweep the regularization strength and print the train/test gap and the
spurious feature's importance at each value."""

from carelab.harness import run_lambda_sweep

res = run_lambda_sweep(seeds=(0,))
print(f"{'lambda':>8}  {'train':>6}  {'test':>6}  {'Xspur':>6}")
for lam, entry in res.summary.items():
    tr = entry["train"]["f1"]["median"]
    te = entry["test"]["f1"]["median"]
    print(f"{float(lam):>8g}  {tr:6.3f}  {te:6.3f}  {entry['importance']['Xspur']:6.3f}")
