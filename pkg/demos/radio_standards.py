"""Per-session and aggregate throughput of each radio as sessions share one site.

    python3 demos/radio_standards.py
"""

from ruralmesh import LinkProfile, RadioStandard, effective_rate

print(f"{'sessions':>8}" + "".join(f"{s.label + ' per/agg Mbps':>24}" for s in RadioStandard))
for k in (1, 2, 3, 4, 6, 12, 16):
    cells = []
    for s in RadioStandard:
        r = effective_rate(LinkProfile(s, efficiency=0.5), k)
        cells.append(f"{r / 1e6:>11.2f} / {k * r / 1e6:>8.2f}")
    print(f"{k:>8}" + "".join(f"{c:>24}" for c in cells))
