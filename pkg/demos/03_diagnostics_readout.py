"""Diagnostic payloads and NFC interface planning per BMS topology.

Run:  python demos/03_diagnostics_readout.py
"""

from nfcbms import diagnostics as dg

packs = [
    dg.BpcReport(
        pack_id=bytes([n]) * 8,
        timestamp=1_700_000_000 + 60 * n,
        soc_permille=870 - 5 * n,
        soh_permille=965,
        cell_voltages_mv=(3698, 3701, 3702, 3699),
        temperatures_dk=(2931, 2944),
        status_flags=int(dg.StatusFlags.STORED),
    )
    for n in (1, 2, 3)
]

print("== active diagnostic: the controller aggregates every pack's report ==")
packet = dg.collect_from_bpcs(packs, seq=42)
raw = dg.encode_diag(packet)
print(f"   {len(packet.reports)} reports -> {len(raw)} wire bytes")
print(f"   header: {raw[:8].hex()}")
assert dg.decode_diag(raw) == packet

print("\n== idle diagnostic: one stored pack answers for itself ==")
idle = dg.idle_packet(packs[0], seq=1)
print(f"   pack {idle.reports[0].pack_id.hex()}  SoC {idle.reports[0].soc_permille / 10:.1f}%"
      f"  SoH {idle.reports[0].soh_permille / 10:.1f}%")

print("\n== how many NFC interfaces does each BMS topology need? ==")
rows = [
    ("centralized", dg.topology_plan(dg.Topology.CENTRALIZED, 1)),
    ("modulated, 3 followers", dg.topology_plan(dg.Topology.MODULATED, 3)),
    ("distributed, 4 packs", dg.topology_plan(dg.Topology.DISTRIBUTED, 4)),
    (
        "decentralized (2+3)",
        dg.topology_plan(
            dg.Topology.DECENTRALIZED,
            subsystems=[(dg.Topology.DISTRIBUTED, 2), (dg.Topology.DISTRIBUTED, 3)],
        ),
    ),
]
print(f"   {'topology':<24}{'tags':>5}{'readers':>9}   idle readout")
for name, plan in rows:
    feasible = "ok" if plan.idle_feasible else f"infeasible ({plan.note})"
    print(f"   {name:<24}{plan.ntag_count:>5}{plan.reader_count:>9}   {feasible}")
