"""Walk one sensor reading from a kiosk to the CDC and print each step.

    python3 demos/tiny_trace.py
"""

from pathlib import Path

from ruralmesh import load_scenario
from ruralmesh.engine import Simulation

SCENARIO = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "tiny_scenario.json"

sim = Simulation(load_scenario(SCENARIO), 3 * 3600.0, check_invariants=True)
sim.run()
for ev in sim.event_log:
    if ev["kind"] in ("FerryMove",):
        continue
    print(f"{ev['t']:>12.4f}  {ev['kind']:<18} "
          + " ".join(f"{k}={v}" for k, v in ev.items() if k not in ("t", "kind", "seq")))
print()
print(f"delivered to DPC at {sim.delivered_at[1]:.6f} s, at CDC by {sim.cdc_arrival[1]:.6f} s")
