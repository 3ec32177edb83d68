"""Pass/fail thresholds for the reproduction studies.

Each check returns a list of ``(label, passed, detail)`` tuples; the CLI
exits with status 3 if any of them fails under ``--check``.
"""

import math

# minimum least-squares rates of the second-order variant
MIN_RATES = {
    ("poisson", 2): {"u": 1.9, "q": 0.9},
    ("poisson", 3): {"u": 1.8, "q": 0.85},
    ("stokes", 2): {"u": 1.9, "L": 0.9, "p": 0.9},
    ("stokes", 3): {"u": 1.8, "L": 0.85, "p": 0.85},
}
FIRST_ORDER_U_RATE = (0.8, 1.3)
TAU_PLATEAU_FACTOR = 1.15
TAU_SPREAD_MAX = 3.0
TAU_REFERENCE = 1e2
MAX_RATE_DROP = 0.2
MIN_STRETCH_U_RATE = 1.8
ADAPT_ERROR_FACTOR = 5.0
EFFICIENCY_BOUNDS = (0.1, 10.0)


def check_convergence(record, equation, dim):
    out = []
    variants = record.variants
    if "second" in variants:
        for name, lo in MIN_RATES[(equation, dim)].items():
            rate = record.rate("second", name)
            out.append((f"second-order {name} rate >= {lo}", rate >= lo, f"{rate:.3f}"))
    if "first" in variants:
        lo, hi = FIRST_ORDER_U_RATE
        rate = record.rate("first", "u")
        out.append((f"first-order u rate in [{lo}, {hi}]", lo <= rate <= hi, f"{rate:.3f}"))
    if "second" in variants and "first" in variants:
        e2 = record.rows("second")[-1].errors["u"]
        e1 = record.rows("first")[-1].errors["u"]
        out.append(("second-order u error below first-order at finest level", e2 < e1,
                    f"{e2:.3e} vs {e1:.3e}"))
    return out


def check_tau_sweep(sweep, variant="second"):
    taus, errs = sweep.series(variant, "u")
    at_ref = errs[taus == TAU_REFERENCE]
    out = []
    if at_ref.size:
        ratio = float(at_ref[0] / errs.min())
        out.append((f"u error at tau={TAU_REFERENCE:g} within {TAU_PLATEAU_FACTOR}x of minimum",
                    ratio <= TAU_PLATEAU_FACTOR, f"ratio {ratio:.3f}"))
    for name in sweep.names[1:]:
        spread = sweep.spread(variant, name)
        out.append((f"{name} error max/min over tau grid <= {TAU_SPREAD_MAX}",
                    spread <= TAU_SPREAD_MAX, f"{spread:.3f}"))
    return out


def check_robustness(result, variant="second"):
    out = []
    for rec in result.perturbed:
        for name in rec.names:
            reg = result.regular.rate(variant, name)
            per = rec.rate(variant, name)
            if rec.family == "distorted":
                out.append((f"{rec.family} {name} rate drop <= {MAX_RATE_DROP}",
                            reg - per <= MAX_RATE_DROP, f"{reg:.3f} -> {per:.3f}"))
            elif name == "u":
                out.append((f"{rec.family} u rate >= {MIN_STRETCH_U_RATE}",
                            per >= MIN_STRETCH_U_RATE, f"{per:.3f}"))
    return out


def check_adaptivity(result, epsilon):
    last = result.history[-1]
    lo, hi = EFFICIENCY_BOUNDS
    effs = [h.efficiency for h in result.history]
    return [
        (f"max indicator <= {epsilon:g} at termination", result.converged,
         f"{last.max_indicator:.3e} after {len(result.history)} iterations"),
        (f"exact error <= {ADAPT_ERROR_FACTOR:g} eps at termination",
         last.exact_error <= ADAPT_ERROR_FACTOR * epsilon, f"{last.exact_error:.3e}"),
        (f"efficiency within [{lo}, {hi}] every iteration",
         all(lo <= e <= hi for e in effs if not math.isnan(e)),
         ", ".join(f"{e:.3f}" for e in effs)),
    ]
