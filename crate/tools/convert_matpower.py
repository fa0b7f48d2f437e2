#!/usr/bin/env python3
"""Convert a MATPOWER-style case (as shipped by PYPOWER) into the line-oriented
case format read by `gridsub`.

    pip install pypower
    python3 tools/convert_matpower.py case14 1 > cases/ieee14.case
    python3 tools/convert_matpower.py case118 27 > cases/ieee118.case

Conversion rules:
  * bus voltage magnitude and angle are taken from the solved operating point
    stored in the case (VM, VA columns); angles are written in radians;
  * line charging, transformer taps and shunts are dropped;
  * parallel circuits between the same bus pair are merged into a single
    equivalent line (parallel impedance), so a flow sensor on {i, j} is
    unambiguous;
  * the case is fully measured: one injection sensor per bus (bus order),
    then flow sensors for every line in both directions.
"""
import importlib
import math
import sys


def main():
    name = sys.argv[1]
    ref = int(sys.argv[2]) if len(sys.argv) > 2 else None
    mod = importlib.import_module("pypower." + name)
    case = getattr(mod, name)()
    bus = case["bus"]
    branch = case["branch"]
    if ref is None:
        ref = next(int(b[0]) for b in bus if int(b[1]) == 3)

    merged = {}
    order = []
    for br in branch:
        i, j = int(br[0]), int(br[1])
        if int(br[10]) == 0:
            continue
        z = complex(br[2], br[3])
        key = (i, j) if (i, j) in merged or (j, i) not in merged else (j, i)
        if key in merged:
            merged[key] = merged[key] * z / (merged[key] + z)
        else:
            merged[key] = z
            order.append(key)

    out = sys.stdout
    out.write(f"# {name} converted from PYPOWER/MATPOWER data\n")
    out.write(f"# {len(bus)} buses, {len(order)} lines (parallel circuits merged)\n")
    out.write("# bus <id> <V p.u.> <theta rad>\n")
    for b in bus:
        out.write(f"bus {int(b[0])} {b[7]:.6f} {math.radians(b[8]):.9f}\n")
    out.write(f"ref {ref}\n")
    out.write("# line <from> <to> <R> <X> <status>\n")
    for (i, j) in order:
        z = merged[(i, j)]
        out.write(f"line {i} {j} {z.real:.8f} {z.imag:.8f} 1\n")
    out.write("# sensors: injections, then flows in both directions\n")
    for b in bus:
        out.write(f"sensor inj {int(b[0])}\n")
    for (i, j) in order:
        out.write(f"sensor flow {i} {j}\n")
        out.write(f"sensor flow {j} {i}\n")


if __name__ == "__main__":
    main()
