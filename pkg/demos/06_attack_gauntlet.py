"""Throw the full adversary gauntlet at the protocol stack.

Run:  python demos/06_attack_gauntlet.py
"""

from nfcbms import adversary as adv

print("canonical single runs (what stops each attack, and where):\n")
for name in adv.STRATEGY_NAMES:
    outcome = adv.canonical_demo(name, seed=11)
    if outcome.first_failure is None:
        verdict = (
            f"passive; session completed, secrecy hits: {len(outcome.secrecy_hits)}"
        )
    else:
        ff = outcome.first_failure
        verdict = f"blocked at message {ff.frame_no}: {ff.error} in {ff.operation}"
    print(f"  {name:<18} {verdict}")

print("\nfull suite, 100 seeded runs per strategy:\n")
report = adv.run_attack_suite(seed=11)
for name, s in report.strategies.items():
    blocked = ", ".join(f"msg {k}: {v}" for k, v in sorted(s.blocked_at.items()))
    print(f"  {name:<18} successes {s.successes}/{s.runs}, leaks {s.leaks}"
          + (f"; blocked at [{blocked}]" if blocked else "; nothing to block"))
print(f"\ntotal adversary successes: {report.total_successes} (expected 0)")
