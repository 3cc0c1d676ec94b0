#!/usr/bin/env python3
"""Writes the benchmark maps under scenarios/maps/.

Obstacles are axis-aligned boxes filled with one point per voxel center.
"""
import pathlib

RES = 0.1


def box_points(lo, hi):
    n = [int(round((h - l) / RES)) for l, h in zip(lo, hi)]
    for i in range(n[0]):
        for j in range(n[1]):
            for k in range(n[2]):
                yield tuple(l + (idx + 0.5) * RES for l, idx in zip(lo, (i, j, k)))


def write_map(path, size, boxes, comment):
    dims = [int(round(s / RES)) for s in size]
    with open(path, "w") as f:
        f.write(f"# {comment}\n")
        f.write(f"origin 0 0 0 resolution {RES} dims {dims[0]} {dims[1]} {dims[2]}\n")
        for lo, hi in boxes:
            for p in box_points(lo, hi):
                f.write("%.2f %.2f %.2f\n" % p)


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "maps"
    out.mkdir(parents=True, exist_ok=True)
    write_map(out / "hybrid_wall.txt", (8.0, 4.0, 2.0),
              [((1.5, 1.6, 0.0), (2.0, 2.4, 0.8)),
               ((4.0, 0.0, 0.0), (4.2, 4.0, 1.0))],
              "block and a wall spanning the whole width")
    write_map(out / "open_ground.txt", (8.0, 4.0, 2.0), [], "empty room")
    write_map(out / "open_field.txt", (6.0, 6.0, 2.0), [], "empty square field")


if __name__ == "__main__":
    main()
