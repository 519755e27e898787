"""Command-line front end: figures (SVG, PGM) and JSON or CSV reports.

Exit codes: 0 success, 1 a verification failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .num import ZTau, ZTauVec2

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

FILL = ("#e4572e", "#f3a712", "#29335c", "#669bbc")
BOUNDARY_FILL = "#111111"


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    """Nine significant digits, no negative zero."""
    s = f"{float(x):.9g}"
    return "0" if s == "-0" else s


# -- rendering ---------------------------------------------------------------------


def _svg(width: float, height: float, view: tuple[float, float, float, float], body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{fmt(width)}" height="{fmt(height)}" '
        f'viewBox="{" ".join(fmt(v) for v in view)}">\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def render_patch_svg(patch, scale: float = 20.0) -> str:
    """One polygon per tile, filled by type; y points up."""
    from .rules import HEIGHT, WIDTH

    if not len(patch):
        raise ValueError("cannot render an empty patch")
    x0, y0, x1, y1 = (float(c) for c in patch.bbox())
    w, h = x1 - x0, y1 - y0
    body = [f'<g transform="matrix(1 0 0 -1 0 {fmt(y0 + y1)})" stroke="#ffffff" stroke-width="{fmt(w / 400)}">']
    for t in patch:
        px, py = float(t.pos.x), float(t.pos.y)
        tw, th = float(WIDTH[t.type]), float(HEIGHT[t.type])
        pts = ((px, py), (px + tw, py), (px + tw, py + th), (px, py + th))
        coords = " ".join(f"{fmt(a)},{fmt(b)}" for a, b in pts)
        body.append(f'<polygon class="t{t.type}" fill="{FILL[t.type]}" points="{coords}"/>')
    body.append("</g>")
    return _svg(w * scale, h * scale, (x0, y0, w, h), body)


def _runs(mask: np.ndarray):
    """Maximal horizontal runs (iy, ix0, ix1) of True cells; mask is indexed [ix, iy]."""
    for iy in range(mask.shape[1]):
        col = mask[:, iy].astype(np.int8)
        d = np.diff(np.concatenate([[0], col, [0]]))
        for a, b in zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)):
            yield iy, int(a), int(b)


def _error_svg(message: str) -> str:
    return _svg(400, 40, (0, 0, 400, 40), [f'<text x="4" y="24" font-size="14">error: {message}</text>'])


def render_window_svg(window, scale: float = 200.0) -> str:
    """Four panels, one per window; raster boundary cells drawn in a separate colour."""
    from .window import PolyWindow

    panels = []
    if isinstance(window, PolyWindow):
        for i in range(4):
            vs = [v.to_float() for v in window.vertices(i)]
            coords = " ".join(f"{fmt(a)},{fmt(b)}" for a, b in vs)
            panels.append((window.bbox(i), [f'<polygon fill="{FILL[i]}" stroke="{BOUNDARY_FILL}" '
                                            f'stroke-width="0.004" points="{coords}"/>']))
    else:
        if not any(t.occupied.any() for t in window.types):
            return _error_svg("empty raster")
        h = window.h
        for i, t in enumerate(window.types):
            items = []
            for mask, colour in ((t.inside, FILL[i]), (t.boundary, BOUNDARY_FILL)):
                for iy, a, b in _runs(mask):
                    items.append(
                        f'<rect fill="{colour}" x="{fmt((t.origin[0] + a) * h)}" y="{fmt((t.origin[1] + iy) * h)}" '
                        f'width="{fmt((b - a) * h)}" height="{fmt(h)}"/>'
                    )
            panels.append((window.bboxes[i], items))
    gap = 0.2
    x = 0.0
    body = []
    top = max(b[3] for b, _ in panels)
    bottom = min(b[1] for b, _ in panels)
    for (bx0, by0, bx1, by1), items in panels:
        body.append(f'<g transform="matrix(1 0 0 -1 {fmt(x - bx0)} {fmt(top + bottom)})">')
        body.extend(items)
        body.append("</g>")
        x += (bx1 - bx0) + gap
    width, height = x - gap, top - bottom
    return _svg(width * scale, height * scale, (0, bottom, width, height), body)


def render_window_pgm(raster) -> tuple[bytes, dict]:
    """P5 image with the four panels side by side (0 outside, 128 boundary, 255 inside)."""
    panels = []
    for t in raster.types:
        img = np.where(t.inside, 255, np.where(t.occupied, 128, 0)).astype(np.uint8)
        panels.append(img.T[::-1])  # rows top to bottom, y up
    rows = max(p.shape[0] for p in panels)
    padded = [np.pad(p, ((rows - p.shape[0], 0), (0, 1))) for p in panels]
    img = np.concatenate(padded, axis=1)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    side = raster.to_json()
    side.update({"h": raster.h, "origins": [list(t.origin) for t in raster.types],
                 "widths": [p.shape[1] for p in panels], "height": rows})
    return header + img.tobytes(), side


# -- argument helpers -----------------------------------------------------------------


def _rules(args):
    from .rules import ALL_RULES, RuleId

    if getattr(args, "all", False):
        return list(ALL_RULES)
    if args.rule is None:
        raise UsageError("give --rule i1,i2,i3 or --all")
    try:
        return [RuleId.parse(args.rule)]
    except ValueError as e:
        raise UsageError(str(e)) from None


def _one_rule(args):
    rules = _rules(args)
    if len(rules) != 1:
        raise UsageError("this command takes a single --rule")
    return rules[0]


def _region(text: str):
    try:
        vals = [float(Fraction(v.strip())) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --region {text!r}") from None
    if len(vals) != 4 or vals[0] > vals[2] or vals[1] > vals[3]:
        raise UsageError("--region must be x0,y0,x1,y1 with x0 <= x1 and y0 <= y1")
    return tuple(vals)


def _seed_shift(text: str | None):
    if text is None:
        return None
    try:
        p, q = (Fraction(v.strip()) for v in text.split(","))
    except ValueError:
        raise UsageError(f"bad --seed-shift {text!r}; expected 'p,q' with rationals") from None
    if p.denominator == 1 and q.denominator == 1:
        return ZTauVec2(ZTau(int(p)), ZTau(int(q)))
    return (float(p), float(q))


def _res(k: int) -> int:
    from .window import RES_MAX, RES_MIN

    if not RES_MIN <= k <= RES_MAX:
        raise UsageError(f"--res must lie in [{RES_MIN}, {RES_MAX}]")
    return k


def _emit(args, payload, binary: bool = False) -> None:
    if args.out:
        mode = "wb" if binary else "w"
        with open(args.out, mode) as f:
            f.write(payload)
    elif binary:
        raise UsageError("binary output needs --out")
    else:
        sys.stdout.write(payload)


def _json(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


# -- commands ---------------------------------------------------------------------------


def cmd_rules(args) -> int:
    from .rules import M, rule_to_json, substitution_matrix, verify_stone

    out, ok = [], True
    rules = _rules(args) if (args.rule or args.all) else _rules(argparse.Namespace(all=True, rule=None))
    for r in rules:
        rep = verify_stone(r)
        mat = substitution_matrix(r)
        good = rep.ok and [list(row) for row in M] == mat
        ok &= good
        d = rule_to_json(r)
        d.update({"matrix": mat, "stone_ok": rep.ok, "problems": rep.problems})
        out.append(d)
    _emit(args, _json(out))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_inflate(args) -> int:
    from .rules import supertile_patch

    r = _one_rule(args)
    try:
        patch, bbox = supertile_patch(r, args.steps)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.format == "svg":
        _emit(args, render_patch_svg(patch))
    elif args.format == "json":
        _emit(args, _json({"rule": str(r), "steps": args.steps, "counts": patch.type_counts(),
                           "bbox": [str(c) for c in bbox], "tiles": patch.to_json()}))
    else:
        raise UsageError("inflate supports --format svg|json")
    return EXIT_OK


def cmd_window(args) -> int:
    from .window import NotPolygonal, attractor_raster, certify_polygonal_window, window_ifs

    r = _one_rule(args)
    ifs = window_ifs(r)
    raster = attractor_raster(ifs, _res(args.res))
    poly = None
    if args.res >= 8:  # certification needs k >= 8
        try:
            poly = certify_polygonal_window(ifs, raster)
        except NotPolygonal:
            pass
    if args.format == "pgm":
        if not args.out:
            raise UsageError("--format pgm needs --out")
        data, side = render_window_pgm(raster)
        _emit(args, data, binary=True)
        Path(args.out + ".json").write_text(_json(side))
    elif args.format == "svg":
        svg = render_window_svg(poly if poly is not None else raster)
        _emit(args, svg)
        if "error:" in svg:
            return EXIT_FAIL
    elif args.format == "json":
        d = {"raster": raster.to_json(), "polygon": poly.to_json() if poly else None}
        _emit(args, _json(d))
    else:
        raise UsageError("window supports --format svg|pgm|json")
    return EXIT_OK


def cmd_modelset(args) -> int:
    from .cps import model_set, rule_window, seed_shift
    from .window import window_ifs

    r = _one_rule(args)
    if _res(args.res) < 8:
        raise UsageError("modelset needs --res of at least 8")
    poly, raster = rule_window(r, args.res)
    window = poly if poly is not None else raster
    shift = _seed_shift(args.seed_shift)
    if shift is None:
        shift = seed_shift(r, args.steps)
    region = _region(args.region)
    ms = model_set(window, region, shift, ifs=window_ifs(r) if poly is None else None)
    d = ms.to_json()
    d.update({"rule": str(r), "region": list(region),
              "shift": [str(c) for c in (shift.x, shift.y)] if isinstance(shift, ZTauVec2) else list(shift)})
    _emit(args, _json(d))
    return EXIT_OK if not ms.uncertain else EXIT_FAIL


def cmd_verify(args) -> int:
    from .cps import compare_patch_modelset
    from .rules import M, substitution_matrix, verify_stone

    out, ok = [], True
    for r in _rules(args):
        stone = verify_stone(r)
        rep = compare_patch_modelset(r, args.steps, k=_res(args.res))
        good = stone.ok and substitution_matrix(r) == [list(row) for row in M] and rep.ok
        ok &= good
        d = rep.to_json()
        d.update({"stone_ok": stone.ok, "ok": good})
        out.append(d)
        print(f"{r}: {'ok' if good else 'FAIL'}", file=sys.stderr)
    _emit(args, _json(out))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_classify(args) -> int:
    from .classify import classify_all, summary

    reports = classify_all()
    s = summary(reports)
    shears_ok = all(
        r.shear.det_ok and r.shear.lattice_ok and r.shear.candidates == 1 for r in reports if r.shear
    )
    expected = {"square": 4, "parallelogram": 24, "fractal": 20}
    ok = shears_ok and s["counts"] == expected
    s["verified"] = ok
    _emit(args, _json(s))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_shear(args) -> int:
    from .classify import ShearNotFound, classify_window, detect_shear

    if args.all:
        from .rules import ALL_RULES

        rules = [r for r in ALL_RULES if classify_window(r).kind == "parallelogram"]
    else:
        rules = _rules(args)
    out, ok = [], True
    for r in rules:
        try:
            rep = detect_shear(r)
        except ShearNotFound as e:
            raise UsageError(str(e)) from None
        ok &= rep.det_ok and rep.lattice_ok and rep.candidates == 1
        out.append(rep.to_json())
    _emit(args, _json(out))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_conjugacy(args) -> int:
    from .classify import ShearNotFound, detect_shear
    from .conjugacy import probe_sweep

    if args.rule:
        try:
            shear = detect_shear(_one_rule(args)).shear
        except ShearNotFound as e:
            raise UsageError(str(e)) from None
    else:
        from .window import Shear

        shear = Shear("x", ZTau(-1))
    results, fit = probe_sweep(shear, args.delta, args.T)
    ok = all(r.bound_ok and r.norm_ok for r in results)
    _emit(args, _json({
        "shear": str(shear),
        "delta": args.delta,
        "T": args.T,
        "fit": fit.to_json(),
        "max_slack": max(r.slack for r in results),
        "ok": ok,
        "probes": [r.to_json() for r in results],
    }))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_diffract(args) -> int:
    from .diffract import patch_points, peak_table, peaks_csv, smallest_peaks
    from .num import TAU_F

    rows = peak_table(smallest_peaks(args.peaks), args.radius)
    density = len(patch_points(args.radius)) / (math.pi * args.radius**2)
    ok = all(r.rel_error < 0.05 for r in rows) and abs(density / (TAU_F**2 / 5) - 1) < 0.01
    if args.format == "json":
        _emit(args, _json({
            "density": density,
            "peaks": [dict(r.peak.to_json(), abs_patch=abs(r.patch), abs_analytic=abs(r.analytic))
                      for r in rows],
            "ok": ok,
        }))
    else:
        _emit(args, peaks_csv(rows))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "rules": cmd_rules,
    "inflate": cmd_inflate,
    "window": cmd_window,
    "modelset": cmd_modelset,
    "verify": cmd_verify,
    "classify": cmd_classify,
    "shear": cmd_shear,
    "conjugacy": cmd_conjugacy,
    "diffract": cmd_diffract,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fibdpv", description="Fibonacci direct-product-variation tilings")
    sub = p.add_subparsers(dest="command", required=True)
    defaults = {
        "rules": dict(format="json"),
        "inflate": dict(format="svg"),
        "window": dict(format="svg"),
        "modelset": dict(format="json"),
        "verify": dict(format="json"),
        "classify": dict(format="json"),
        "shear": dict(format="json"),
        "conjugacy": dict(format="json"),
        "diffract": dict(format="csv"),
    }
    for name, d in defaults.items():
        sp = sub.add_parser(name)
        sp.add_argument("--rule", help="rule id i1,i2,i3")
        sp.add_argument("--all", action="store_true", help="all applicable rules")
        sp.add_argument("--steps", type=int, default=6)
        sp.add_argument("--res", type=int, default=8 if name != "verify" else 10)
        sp.add_argument("--region", default="-10,-10,10,10")
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("svg", "json", "pgm", "csv"), default=d["format"])
        sp.add_argument("--seed-shift", dest="seed_shift")
        if name == "conjugacy":
            sp.add_argument("--delta", type=float, default=0.1)
            sp.add_argument("--T", type=float, default=500.0)
        if name == "diffract":
            sp.add_argument("--peaks", type=int, default=20)
            sp.add_argument("--radius", type=float, default=200.0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"fibdpv: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
