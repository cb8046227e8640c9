"""Execute scenarios and write their artifacts."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fock, kleingordon as kg, subspace as ss
from .oracles import wedge_entropy_at_origin
from .reallin import ComplexVector, to_complex, to_real
from .scenario import Scenario, build_subspace

log = logging.getLogger(__name__)

CSV_COLUMNS = ("lambda", "S", "dS_analytic", "dS_fd", "d2S_analytic", "d2S_fd", "qnec_margin")


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class RunReport:
    scenario: dict
    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    curve: dict | None = None
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, residual: float, tolerance: float, detail: str = ""):
        residual = float(residual)
        ok = bool(np.isfinite(residual) and residual <= tolerance)
        self.checks.append(Check(name, residual, float(tolerance), bool(ok), detail))

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "curve": self.curve,
            "tables": self.tables,
        }


class _Timer:
    def __init__(self, report: RunReport, key: str):
        self.report, self.key = report, key

    def __enter__(self):
        self.start = time.perf_counter()

    def __exit__(self, *exc):
        self.report.timings[self.key] = time.perf_counter() - self.start


def _rel(err: float, scale: float) -> float:
    return float(err / scale) if scale > 0 else float(err)


def run(sc: Scenario, workers: int | None = None) -> tuple[RunReport, dict]:
    """Run a scenario; returns the report and the text artifacts keyed by kind."""
    report = RunReport(scenario=sc.raw)
    workers = workers or sc.workers
    artifacts: dict = {}
    if sc.mode == "wave-entropy":
        _run_wave(sc, report, artifacts, workers)
    elif sc.mode == "convergence":
        run_convergence(sc, report, sc.doublings)
    elif sc.mode == "subspace-demo":
        _run_subspace(sc, report)
    elif sc.mode == "fock-check":
        _run_fock(sc, report)
    return report, artifacts


# --- wave entropy -----------------------------------------------------------


def sweep_with_fd(data: kg.CauchyData, lambdas, workers: int = 1):
    """Curve on ``lambdas`` plus central differences of S with step dx."""
    grid = data.grid
    idx = np.array([grid.snap(lam)[0] for lam in lambdas])
    needed = np.unique(np.concatenate([idx - 1, idx, idx + 1]))
    curve = kg.entropy_sweep(data, grid.axis[needed], workers=workers)
    pos = {i: p for p, i in enumerate(needed)}
    s = curve.s
    here = np.array([pos[i] for i in idx])
    left, right = here - 1, here + 1
    dx = grid.dx
    fd1 = (s[right] - s[left]) / (2 * dx)
    fd2 = (s[right] - 2 * s[here] + s[left]) / dx**2
    main = kg.EntropyCurve(curve.lambdas[here], s[here], curve.s1[here], curve.s2[here], curve.s_symplectic[here])
    return main, fd1, fd2


def _run_wave(sc: Scenario, report: RunReport, artifacts: dict, workers: int) -> None:
    tol = sc.tolerances
    data = sc.wave.cauchy_data()
    grid = data.grid
    lams = sc.lambdas(grid)
    with _Timer(report, "sweep"):
        curve, fd1, fd2 = sweep_with_fd(data, lams, workers)

    s_scale = float(np.max(np.abs(curve.s)))
    s1_scale = float(np.max(np.abs(curve.s1)))
    s2_scale = float(np.max(np.abs(curve.s2)))
    two_path_tol = tol["two_path_1d"] if grid.d == 1 else tol["two_path_2d"]
    report.add("two_path", _rel(np.max(np.abs(curve.s - curve.s_symplectic)), s_scale), two_path_tol,
               "energy vs symplectic formula, max over sweep / max S")
    report.add("fd_first", _rel(np.max(np.abs(curve.s1 - fd1)), s1_scale), tol["fd_first"],
               "analytic dS vs central difference, / max |dS|")
    report.add("fd_second", _rel(np.max(np.abs(curve.s2 - fd2)), s2_scale), tol["fd_second"],
               "analytic d2S vs second difference, / max |d2S|")
    report.add("qnec", _rel(max(0.0, -curve.qnec_margin), s2_scale), tol["qnec"], "max(0, -min d2S) / max d2S")
    report.add("monotone", _rel(max(0.0, float(np.max(curve.s1))), s1_scale), tol["monotone"],
               "max(0, max dS) / max |dS|")
    report.add("convexity", _rel(max(0.0, -curve.convexity_margin()), s_scale), tol["convexity"],
               "max(0, -min second difference of S) / max S")

    with _Timer(report, "additivity"):
        worst = 0.0
        for lam in sorted({float(lams[0]), float(lams[len(lams) // 2]), float(lams[-1])}):
            sliced = data.at(lam)
            f_part, g_part = sliced.split()
            for formula in (kg.entropy_energy, kg.entropy_symplectic):
                whole = formula(sliced, lam)
                parts = formula(f_part, lam) + formula(g_part, lam)
                worst = max(worst, _rel(abs(whole - parts), max(abs(whole), s_scale)))
    report.add("additivity", worst, tol["additivity"], "S(f,g) - S(f,0) - S(0,g) on slices, both formulas")

    with _Timer(report, "conservation"):
        report.add("conservation", conservation_drift(data, [float(lams[0]), float(lams[-1])]),
                   tol["conservation"], "energy, symplectic form and one-particle norm drift")

    if grid.d == 1 and not sc.wave.fields_in and data.t0 == 0.0 and np.any(np.abs(lams) < 0.5 * grid.dx):
        try:
            oracle = wedge_entropy_at_origin(sc.wave.f, sc.wave.g, data.mass)
        except ValueError:
            oracle = None
        if oracle is not None:
            s0 = float(curve.s[np.argmin(np.abs(curve.lambdas))])
            report.add("oracle", _rel(abs(s0 - oracle), abs(oracle)), tol["oracle"],
                       f"S(0) = {s0!r} vs adaptive quadrature {oracle!r}")

    margin = curve.s2 / s2_scale if s2_scale > 0 else np.zeros_like(curve.s2)
    rows = np.column_stack([curve.lambdas, curve.s, curve.s1, fd1, curve.s2, fd2, margin])
    report.curve = {
        "lambdas": curve.lambdas.tolist(),
        "s": curve.s.tolist(),
        "s1": curve.s1.tolist(),
        "s2": curve.s2.tolist(),
        "qnec_margin": curve.qnec_margin,
    }
    artifacts["csv"] = _csv(rows)
    artifacts["svg"] = svg_line_chart(curve.lambdas, curve.s, title=sc.name)
    # export the slice clipped to the light-cone support so that a reload
    # recovers a compact support box
    artifacts["state"] = kg.evolve(data.at(float(lams[-1])), float(lams[-1]))


def conservation_drift(data: kg.CauchyData, times) -> float:
    """Largest relative drift of energy, symplectic form and norm between t0 and ``times``."""
    grid = data.grid
    partner = kg.CauchyData(grid, data.mass, data.g, data.f, data.support, data.t0)
    a0 = kg.evolve(data, data.t0)
    b0 = kg.evolve(partner, data.t0)
    e0 = kg.total_energy(a0)
    n_a = kg.one_particle_inner(a0, a0).real
    n_b = kg.one_particle_inner(b0, b0).real
    w0 = kg.symplectic_form(a0, b0)
    if e0 == 0:
        return 0.0
    worst = 0.0
    for t in times:
        a, b = kg.evolve(data, t), kg.evolve(partner, t)
        worst = max(
            worst,
            abs(kg.total_energy(a) - e0) / e0,
            abs(kg.one_particle_inner(a, a).real - n_a) / n_a,
            abs(kg.symplectic_form(a, b) - w0) / np.sqrt(n_a * n_b),
        )
    return float(worst)


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def svg_line_chart(x, y, title: str = "", width: int = 640, height: int = 400) -> str:
    """Self-contained SVG line plot of y(x)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    pad = 50
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    px = pad + (x - x0) / (x1 - x0) * (width - 2 * pad)
    py = height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)
    points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{points}"/>\n'
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle" font-size="14">{_escape(title)}</text>\n'
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">lambda [{x0:.4g}, {x1:.4g}]</text>\n'
        f'<text x="12" y="{height / 2}" font-size="12" transform="rotate(-90 12 {height / 2})" '
        f'text-anchor="middle">S [{y0:.4g}, {y1:.4g}]</text>\n'
        "</svg>\n"
    )


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# --- convergence --------------------------------------------------------------


def _decay_residual(errors, floors, factor):
    """max over doublings of fine / max(coarse / factor, floor); <= 1 means the decay holds."""
    return max(fine / max(coarse / factor, fl) for coarse, fine, fl in zip(errors, errors[1:], floors[1:]))


def _observed_orders(errors, floors):
    """log2 ratios of successive errors; None where either error is at its floor."""
    return [
        None if coarse <= fc or fine <= ff else float(np.log2(coarse / fine))
        for coarse, fine, fc, ff in zip(errors, errors[1:], floors, floors[1:])
    ]


def run_convergence(sc: Scenario, report: RunReport, doublings: int) -> None:
    tol = sc.tolerances
    floor = tol["rounding_floor"]
    table = []
    lam0 = None
    for j in range(doublings + 1):
        N = sc.wave.N * 2**j
        with _Timer(report, f"N={N}"):
            data = sc.wave.cauchy_data(N)
            grid = data.grid
            if lam0 is None:
                lam0 = grid.snap(sc.lambda0)[1]
            curve, fd1, fd2 = sweep_with_fd(data, [lam0])
        s, s1, s2, sym = curve.s[0], curve.s1[0], curve.s2[0], curve.s_symplectic[0]
        table.append({
            "N": N,
            "dx": grid.dx,
            "lambda": float(curve.lambdas[0]),
            "S": float(s),
            "dS": float(s1),
            "d2S": float(s2),
            "two_path": _rel(abs(s - sym), abs(s)),
            "fd_first": _rel(abs(s1 - fd1[0]), abs(s1)),
            "fd_second": _rel(abs(s2 - fd2[0]), abs(s2)),
        })

    # the smallest two-path discrepancy over the sequence measures the rounding
    # noise in S; a difference quotient amplifies it by 1/dx or 4/dx^2
    eps = np.finfo(float).eps
    noise = 10.0 * max(min(abs(r["two_path"] * r["S"]) for r in table), eps * max(abs(r["S"]) for r in table))
    for row in table:
        row["fd_first_floor"] = max(floor, _rel(noise / row["dx"], abs(row["dS"])))
        row["fd_second_floor"] = max(floor, _rel(4.0 * noise / row["dx"] ** 2, abs(row["d2S"])))

    order = tol["order"] - tol["order_slack"]
    for key in ("fd_first", "fd_second"):
        errs = [row[key] for row in table]
        floors = [row[f"{key}_floor"] for row in table]
        orders = _observed_orders(errs, floors)
        for row, o in zip(table[1:], orders):
            row[f"{key}_order"] = o
        above = [i for i, o in enumerate(orders) if o is not None]
        monotone = _decay_residual(errs, floors, 1.0)
        if above:
            i = above[-1]
            asymptotic = errs[i + 1] / (errs[i] * 2.0**-order)
        else:
            asymptotic = 0.0
        report.add(f"{key}_order", max(monotone, asymptotic), 1.0,
                   f"observed orders {orders}; finest pair above the rounding floor must reach "
                   f"{order:g} and no doubling may increase the error (residual <= 1)")

    errs = [row["two_path"] for row in table]
    report.add("two_path_decay", _decay_residual(errs, [floor] * len(errs), 4.0), 1.0,
               f"discrepancies {errs}; each doubling must divide by 4 or reach {floor:g} (residual <= 1)")
    report.tables["convergence"] = table


# --- subspaces ------------------------------------------------------------------


def _population(sc: Scenario, max_default: int):
    rng = np.random.default_rng(int((sc.random or {}).get("seed", 0)))
    subs = []
    if sc.subspace is not None:
        subs.append((build_subspace(sc.subspace), list(sc.vectors)))
    if sc.random is not None:
        count = int(sc.random.get("count", 10))
        max_n = int(sc.random.get("max_n", max_default))
        even = [n for n in range(2, max_n + 1, 2)]
        for i in range(count):
            subs.append((ss.random_factorial_subspace(even[i % len(even)], rng), []))
    return subs, rng


def _random_vector(n, rng):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def _run_subspace(sc: Scenario, report: RunReport) -> None:
    tol = sc.tolerances
    subs, rng = _population(sc, 8)
    worst = dict.fromkeys(("cutting", "lemma", "modular", "paths", "quotient"), 0.0)
    min_entropy = np.inf
    dims = []
    with _Timer(report, "subspace"):
        for h, vectors in subs:
            hf, ha = ss.factorial_split(h)
            dims.append([hf.n, ha.n])
            worst["modular"] = max(worst["modular"], *ss.modular_residuals(h).values())
            if hf.n == 0:
                continue
            vecs = [hf.embedding.conj().T @ v for v in vectors] + [_random_vector(hf.n, rng)]
            worst["lemma"] = max(worst["lemma"], *ss.cutting_lemma_residuals(hf).values())
            for z in vecs:
                k = ComplexVector.from_complex(z)
                norm = max(k.norm(), 1e-300)
                diff = ss.cutting_project(hf, k).coords - ss.cutting_project_oracle(hf, k).coords
                worst["cutting"] = max(worst["cutting"], np.linalg.norm(diff) / norm)
                values = {p: ss.vector_entropy(hf, k, p).value for p in (ss.PATH_CUTTING, ss.PATH_ORACLE, ss.PATH_SPECTRAL)}
                s = values[ss.PATH_CUTTING]
                min_entropy = min(min_entropy, s)
                spread = max(values.values()) - min(values.values())
                worst["paths"] = max(worst["paths"], spread / max(1.0, s))
                limit = ss.richardson_entropy_limit(hf, k)
                worst["quotient"] = max(worst["quotient"], abs(limit - s) / max(abs(s), 1e-300))
    report.add("cutting_vs_oracle", worst["cutting"], tol["cutting"], "|P_H k - oracle(k)| / |k|")
    report.add("cutting_lemma", worst["lemma"], tol["lemma"], "P^2 = P, P_H + P_H' = 1, P* = -iPi, Delta^is commutation")
    report.add("modular_relations", worst["modular"], tol["modular"], "J^2 = 1, J Delta J = Delta^-1, Delta^is H = H")
    report.add("entropy_paths", worst["paths"], tol["entropy_paths"], "cutting formula vs oracle vs spectral integral")
    report.add("difference_quotient", worst["quotient"], tol["difference_quotient"], "Richardson limit of the s-quotient")
    report.add("entropy_nonnegative", max(0.0, -min_entropy) if np.isfinite(min_entropy) else 0.0, 0.0, "min S_k >= 0")
    report.tables["factorial_split_dims"] = dims


def _run_fock(sc: Scenario, report: RunReport) -> None:
    tol = sc.tolerances
    subs, rng = _population(sc, 4)
    cutoff = sc.cutoff
    worst = dict.fromkeys(("overlap", "weyl", "fv", "inverse", "derivative", "general"), 0.0)
    with _Timer(report, "fock"):
        for h_sub, vectors in subs:
            n = h_sub.n
            vac = fock.FockVector.vacuum(n, cutoff)
            h, k = (_unit_ball(n, rng, 0.5) for _ in range(2))
            eh, ek = fock.coherent_vector(h, cutoff), fock.coherent_vector(k, cutoff)
            exact = np.exp(np.vdot(h, k))
            worst["overlap"] = max(worst["overlap"], abs(fock.overlap(eh, ek) - exact))
            vh = fock.weyl_apply(h, vac)
            worst["fv"] = max(worst["fv"], abs(fock.overlap(vac, vh) - np.exp(-0.5 * np.vdot(h, h).real)))
            lhs = fock.weyl_apply(h + k, vac)
            rhs = fock.weyl_apply(h, fock.weyl_apply(k, vac))
            phase = np.exp(1j * np.vdot(h, k).imag)
            worst["weyl"] = max(worst["weyl"], np.linalg.norm(lhs.coeffs - phase * rhs.coeffs))
            back = fock.weyl_apply(-h, vh)
            worst["inverse"] = max(worst["inverse"], np.linalg.norm(back.coeffs - vac.coeffs))

            hf, _ = ss.factorial_split(h_sub)
            if hf.n == 0:
                continue
            x = to_complex(hf.real_basis @ rng.normal(size=hf.n))
            x *= rng.uniform(0.2, 1.0) / np.linalg.norm(x)
            exact_s = ss.entropy_in_subspace(hf, x)
            fock_s = fock.fock_side_entropy(x, hf, step=sc.fd_step, cutoff=cutoff)
            worst["derivative"] = max(worst["derivative"], abs(fock_s - exact_s))
            for v in vectors:
                z = hf.embedding.conj().T @ v
                s = ss.vector_entropy(hf, ComplexVector.from_complex(z)).value
                part = ss.cutting_project(hf, ComplexVector.from_complex(z)).z
                worst["general"] = max(worst["general"], abs(fock.fock_side_entropy(part, hf, step=sc.fd_step) - s))
    report.add("coherent_overlap", worst["overlap"], tol["fock_tail"], "(e^h, e^k) = e^(h,k)")
    report.add("weyl_relation", worst["weyl"], tol["fock_tail"], "V(h+k) xi = e^{i Im(h,k)} V(h) V(k) xi")
    report.add("vacuum_expectation", worst["fv"], tol["fock_tail"], "(xi, V(h) xi) = e^{-|h|^2/2}")
    report.add("weyl_inverse", worst["inverse"], tol["fock_tail"], "V(-h) V(h) xi = xi")
    report.add("fock_derivative", worst["derivative"], tol["fock_derivative"], "i d/ds (V(h)xi, Gamma(Delta^is) V(h)xi) vs -(h, log Delta h)")
    if any(v for _, v in subs):
        report.add("fock_general_vector", worst["general"], tol["fock_derivative"], "Fock derivative on P_H k vs S_k")


def _unit_ball(n, rng, radius=1.0):
    v = _random_vector(n, rng)
    return v * rng.uniform(0.1, radius) / np.linalg.norm(v)


# --- output -----------------------------------------------------------------


def write_outputs(sc: Scenario, report: RunReport, artifacts: dict, out_dir, svg: bool) -> list:
    """Write report.json, timings.json and the curve artifacts; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = {"report": "report.json", "timings": "timings.json", "csv": "curve.csv", "svg": "curve.svg"}
    names.update({k: v for k, v in sc.outputs.items() if k in names or k == "fields"})
    written = []

    def put(kind: str, text: str):
        path = out / names[kind]
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)
        written.append(path)

    put("report", json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    put("timings", json.dumps(report.timings, indent=2, sort_keys=True) + "\n")
    if "csv" in artifacts:
        put("csv", artifacts["csv"])
    if svg and "svg" in artifacts:
        put("svg", artifacts["svg"])
    if "fields" in names and "state" in artifacts:
        path = out / names["fields"]
        kg.write_fields(path, artifacts["state"])
        written.append(path)
    return written
