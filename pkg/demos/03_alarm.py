"""ALARM scenarios. Pass the path to alarm.bif (from the bnlearn network
repository) as the first argument."""

import sys

from carelab.harness import run_alarm_scenarios

if len(sys.argv) < 2:
    sys.exit("usage: python demos/03_alarm.py path/to/alarm.bif")

res = run_alarm_scenarios(bif_path=sys.argv[1])
for label, entry in res.summary.items():
    acr = entry["models"]["MLP w/ ACR"]["test"]["f1"]
    print(f"scenario {label} (lambda={entry['lambda']}): ACR test F1 {acr['median']:.2f} [{acr['min']:.2f}, {acr['max']:.2f}]")
    print("  top-5:", [e["variable"] for e in entry["top5_importance"]["MLP w/ ACR"]])
