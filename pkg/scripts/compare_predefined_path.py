"""Score the √2·depth circumnavigation path with IQM and probability of improvement."""
from rosb import BaselineConfig, EnvConfig, PredefinedPath, compare, evaluate, metrics

env = EnvConfig(depth=15.0)
m = {}
for label, radius in (("tight", 15.0), ("optimal", None), ("wide", 60.0)):
    bc = BaselineConfig.for_depth(15.0) if radius is None else BaselineConfig(radius=radius)
    m[label] = metrics(evaluate(PredefinedPath(bc, env), env, 50, seed=4))
    print(f"{label:8s} R={bc.radius:5.1f} m  transient IQM {m[label]['transient_iqm']:7.2f} m"
          f"  steady IQM {m[label]['steady_iqm']:.3f} m")

for other in ("tight", "wide"):
    c = compare(m["optimal"], m[other])
    print(f"optimal vs {other}: PoI(transient) {c['prob_improvement_transient']:.2f}")
