"""Run the bundled two-day scenario and print the text summary.

    python3 demos/default_summary.py [hours]
"""

import sys

from ruralmesh import load_default_scenario
from ruralmesh.engine import Simulation
from ruralmesh.metrics import format_text

hours = float(sys.argv[1]) if len(sys.argv) > 1 else 48.0
report = Simulation(load_default_scenario(), hours * 3600.0).run()
print(format_text(report.to_dict()), end="")
for a in report.emergency_alerts:
    print(f"alert for message {a['message_id']} ({a['kind']}): raised at {a['raised_at_node']} "
          f"t={a['raised_at_s']:.1f}, delivered t={a['delivered_at_s']:.1f}, "
          f"CDC arrival t={a['cdc_arrival_s']}")
for d in report.decisions:
    print(f"decision t={d['t']:.0f} {d['area']}: {d['action']}")
