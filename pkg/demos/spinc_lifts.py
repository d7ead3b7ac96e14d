"""Cohomology of the shipped chain complexes and whether w2 lifts to an integral class."""
from monopole import cohomology as co

for name in co.catalog_names():
    cx = co.load_catalog(name)
    groups = [co.cohomology_group(cx, k, "Z").describe() for k in range(cx.dim + 1)]
    line = f"{name:12s} H^*(Z) = {', '.join(groups)}"
    if "w2" in cx.classes:
        d = co.spinc_lift(cx, cx.classes["w2"])
        line += f"   bockstein(w2) = {d.obstruction.coords}  lifts: {'yes' if d.lifts else 'no'}"
    print(line)
