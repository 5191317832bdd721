#!/usr/bin/env python3
"""Writes the three-image toy dataset under data/toy."""
import json
import math
import random
from pathlib import Path

TEMPLATE = {
    "Sella": (800, 900), "Nasion": (1400, 850), "Orbitale": (1280, 1000), "Porion": (600, 1050),
    "Basion": (620, 1300), "Articulare": (640, 1200), "Condylion": (660, 1120), "PNS": (900, 1320),
    "ANS": (1380, 1300), "A_point": (1370, 1380), "U1_root": (1350, 1450), "U1_tip": (1400, 1600),
    "L1_tip": (1390, 1590), "L1_root": (1330, 1740), "B_point": (1340, 1800), "Pm": (1355, 1850),
    "Pogonion": (1370, 1900), "Gnathion": (1350, 1960), "Menton": (1300, 1990), "Gonion": (740, 1700),
    "Subnasale": (1480, 1330), "Pronasale": (1560, 1230), "UpperLip": (1500, 1470),
    "LowerLip": (1490, 1650), "SoftPogonion": (1460, 1950),
}

CHAINS = {
    "cranial_base": ["Basion", "Sella", "Nasion"],
    "palatal_plane": ["PNS", "ANS"],
    "symphysis": ["B_point", "Pogonion", "Gnathion", "Menton"],
    "mandibular_border": ["Condylion", "Articulare", "Gonion", "Menton"],
    "incisor_axis": ["L1_root", "L1_tip"],
}


def densify(points, step=12.0):
    out = []
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        n = max(1, int(math.hypot(x1 - x0, y1 - y0) // step))
        out.extend((x0 + (x1 - x0) * k / n, y0 + (y1 - y0) * k / n) for k in range(n))
    out.append(points[-1])
    return [[round(x, 3), round(y, 3)] for x, y in out]


def main():
    rng = random.Random(7)
    root = Path(__file__).resolve().parent.parent / "data" / "toy"
    (root / "contours").mkdir(parents=True, exist_ok=True)
    records = []
    for i, split in enumerate(["train", "val", "test"]):
        image_id = f"toy{i + 1:03d}"
        dx, dy, s = rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(0.96, 1.04)
        pts = {k: (round(960 + (x - 960) * s + dx, 2), round(1200 + (y - 1200) * s + dy, 2)) for k, (x, y) in TEMPLATE.items()}
        reverse = ["palatal_plane"] if i == 1 else []
        contours = []
        for cls, chain in CHAINS.items():
            verts = densify([pts[n] for n in chain])
            if cls in reverse:
                verts.reverse()
            contours.append({"class": cls, "closed": False, "vertices": verts})
        nasal_start = (pts["Nasion"][0] + 30, pts["Nasion"][1] + 30)
        contours.append({"class": "soft_tissue", "closed": False, "vertices": densify([nasal_start, pts["Pronasale"]])})
        cx, cy, rx, ry = 1000 + dx, 700 + dy, 620 * s, 420 * s
        vault = [[round(cx + rx * math.cos(t), 3), round(cy - ry * abs(math.sin(t)) ** 0.9 * (1 if math.sin(t) >= 0 else -0.3), 3)]
                 for t in (2 * math.pi * k / 90 for k in range(90))]
        contours.append({"class": "cranial_vault", "closed": True, "vertices": vault})
        (root / "contours" / f"{image_id}.json").write_text(json.dumps(contours, indent=1) + "\n")
        records.append({
            "id": image_id, "width": 1935, "height": 2400, "pixel_spacing": 0.1, "split": split,
            "source": "toy", "reverse_contours": reverse,
            "landmarks": [{"name": n, "x": x, "y": y, "visible": True} for n, (x, y) in pts.items()],
        })
    (root / "manifest.json").write_text(json.dumps({"seed": 42, "records": records}, indent=1) + "\n")


if __name__ == "__main__":
    main()
