#!/usr/bin/env python3
"""Regenerates tandil_toy.json: a 7x7 downtown grid with metered core blocks."""
import json
import math
import random

R = 6371008.8
ORIGIN = {"lat": -37.3217, "lon": -59.1332}
SPACING = 100.0
EAST_WEST = ["Chacabuco", "Belgrano", "9 de Julio", "San Martín", "Rodríguez", "Pinto", "Alem"]
NORTH_SOUTH = ["Sarmiento", "Mitre", "General Paz", "Yrigoyen", "Maipú", "Sáenz Peña", "España"]
# One-way rows: +1 west to east, -1 east to west.
ONE_WAY_ROWS = {3: +1, 4: -1}


def to_latlon(x, y):
    lat0 = math.radians(ORIGIN["lat"])
    lat = ORIGIN["lat"] + math.degrees(y / R)
    lon = ORIGIN["lon"] + math.degrees(x / (R * math.cos(lat0)))
    return round(lat, 8), round(lon, 8)


def main():
    rng = random.Random(2017)
    pos = {}
    nodes = []
    for r in range(7):
        for c in range(7):
            nid = f"n{r}{c}"
            x = c * SPACING + rng.uniform(-4, 4)
            y = -r * SPACING + rng.uniform(-4, 4)
            pos[nid] = (x, y)
            lat, lon = to_latlon(x, y)
            nodes.append({"id": nid, "lat": lat, "lon": lon})

    edges, blocks = [], []

    def add_edge(a, b, street, directed):
        eid = f"e-{a}-{b}"
        edges.append({"id": eid, "from": a, "to": b, "street": street, "directed": directed})
        (ax, ay), (bx, by) = pos[a], pos[b]
        length = math.hypot(bx - ax, by - ay)
        usable = math.floor(length * 10) / 10
        prohibited = [[0.0, 5.0], [round(usable - 5.0, 2), usable]]
        if rng.random() < 0.3:
            s = round(rng.uniform(15, usable - 30), 1)
            prohibited.append([s, round(s + 12.0, 1)])
        garages = []
        for _ in range(rng.randint(0, 3)):
            s = round(rng.uniform(6, usable - 10), 1)
            garages.append([s, round(s + 3.0, 1)])
        ra, ca = int(a[1]), int(a[2])
        rb, cb = int(b[1]), int(b[2])
        metered = all(1 <= v <= 5 for v in (ra, ca, rb, cb))
        blocks.append({"id": "b" + eid[1:], "edge": eid, "usable_length": usable,
                       "prohibited": prohibited, "garages": garages, "metered": metered})

    for r in range(7):
        for c in range(6):
            a, b = f"n{r}{c}", f"n{r}{c + 1}"
            direction = ONE_WAY_ROWS.get(r)
            if direction == -1:
                a, b = b, a
            add_edge(a, b, EAST_WEST[r], direction is not None)
    for c in range(7):
        for r in range(6):
            add_edge(f"n{r}{c}", f"n{r + 1}{c}", NORTH_SOUTH[c], False)

    gazetteer = []

    def add_place(key, kind, x, y):
        lat, lon = to_latlon(x, y)
        gazetteer.append({"key": key, "kind": kind, "lat": lat, "lon": lon})

    for r, street in enumerate(EAST_WEST):
        (ax, ay), (bx, by) = pos[f"n{r}3"], pos[f"n{r}4"]
        add_place(street, "street", (ax + bx) / 2, (ay + by) / 2)
    for c, street in enumerate(NORTH_SOUTH):
        (ax, ay), (bx, by) = pos[f"n3{c}"], pos[f"n4{c}"]
        add_place(street, "street", (ax + bx) / 2, (ay + by) / 2)
    for r, ew in enumerate(EAST_WEST):
        for c, ns in enumerate(NORTH_SOUTH):
            x, y = pos[f"n{r}{c}"]
            add_place(f"{ew} & {ns}", "intersection", x, y)
    add_place("Plaza Independencia", "landmark", 350.0, -250.0)
    add_place("Municipalidad", "landmark", 300.0, -200.0)
    add_place("Terminal de Ómnibus", "landmark", 620.0, -580.0)
    add_place("Hospital Santamarina", "landmark", 50.0, -520.0)

    doc = {"origin": ORIGIN, "nodes": nodes, "edges": edges, "blocks": blocks,
           "gazetteer": gazetteer}
    with open("tandil_toy.json", "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
