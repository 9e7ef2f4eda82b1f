"""Event-detection vs energy-harvesting wake-up: a storage year in numbers.

Run:  python demos/04_wakeup_power.py
"""

from nfcbms import wakeup as wk

model = wk.PowerModel()
print("idle figures for the modeled parts (3.3 V):")
print(f"  event detection : {wk.idle_power(model, wk.Method.ED):7.2f} uW"
      "   (controller VLPS + tag standby)")
print(f"  energy harvest  : {wk.idle_power(model, wk.Method.EH):7.2f} uW"
      "   (controller VLPS, tag fully off)")

scenario = wk.StorageScenario(
    duration_days=1,
    readouts=(wk.Readout(start_s=43_200, length_s=60),),  # one SoH check at noon
)
print("\none 60 s readout per stored day:")
report = wk.compare_methods(model, scenario)
for name in ("ed", "eh"):
    m = report["methods"][name]
    print(f"  {name}: avg {m['avg_power_uw']:7.2f} uW, "
          f"day energy {m['total_energy_uj'] / 1e6:6.2f} J, "
          f"wake-up {m['wakeup_latency_ms']:5.1f} ms")
print(f"  always-on baseline: {report['always_on_baseline_uw'] / 1000:.1f} mW")
print(f"  lower power: {report['lower_avg_power']}, lower latency: {report['lower_wakeup_latency']}")

days = 365
yearly = {
    name: wk.simulate(
        model,
        wk.StorageScenario(
            duration_days=days,
            readouts=tuple(wk.Readout(86_400 * d + 43_200, 60) for d in range(days)),
        ),
        wk.Method(name),
    )
    for name in ("ed", "eh")
}
print(f"\na storage year with daily checks:")
for name, trace in yearly.items():
    print(f"  {name}: {trace.total_energy_uj / 1e6:8.1f} J "
          f"(idle {trace.idle_energy_uj / 1e6:7.1f} J, "
          f"sessions {trace.active_energy_uj / 1e6:5.1f} J)")
saved = yearly["ed"].total_energy_uj - yearly["eh"].total_energy_uj
print(f"  harvesting saves {saved / 1e6:.1f} J per pack-year of storage")

print("\npiecewise profile around the readout (EH, first five events):")
trace = wk.simulate(model, scenario, wk.Method.EH)
for event in trace.events[:5]:
    print(f"  t={event.time_us / 1e6:12.3f} s  {event.state:<16} {event.power_uw:9.2f} uW")
