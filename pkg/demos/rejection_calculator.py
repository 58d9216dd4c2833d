"""
Rejection calculator walkthrough
================================

How a pair of per-route quality averages (ACD, in minutes) plus billing
preferences turns into per-route rejection percentages.
"""

from acdroute import QualityInput, compute_rejection, render_calc_breakdown

# Route A carries long, real conversations; route B answers instantly and the
# caller hangs up after a few seconds. Billing statically prefers A (9 > 8).
quality = QualityInput(acd_min=(8.67, 0.6), prefs=(9, 8), load_min=0.1)
result = compute_rejection(quality)

print(render_calc_breakdown(result, quality))

# The weak route keeps a measurement share between load_min (10%) and 50%,
# scaled by the quality ratio; the preferred route sheds exactly that share.
print("quality ratio (rank of the weaker route):", round(result.rank[1], 6))
print("target split:", [round(l, 4) for l in result.load])
print("stored rejection percentages:", result.reject_pct)
print()

# Flip the quality: the preferred route collapses to an ACD of 0.17 minutes
# while the backup holds 0.79. Now the preferred route is the weak one, and
# it gets pushed away hard -- its load floor is all it keeps.
collapsed = QualityInput(acd_min=(0.17, 0.79), prefs=(9, 8), load_min=0.1)
print(render_calc_breakdown(compute_rejection(collapsed), collapsed))

# Equal quality is a 50/50 split: half of the preferred route's calls are
# pushed to the backup so both stay measured.
even = QualityInput(acd_min=(5.0, 5.0), prefs=(9, 8), load_min=0.1)
print(render_calc_breakdown(compute_rejection(even), even))

# No evidence, no rejection: a route with no answered calls in the interval
# is never punished for it.
cold = QualityInput(acd_min=(1.29, None), prefs=(9, 8), load_min=0.1)
print(render_calc_breakdown(compute_rejection(cold), cold))
