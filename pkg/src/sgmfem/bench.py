"""Benchmark drivers: tp1 effectivity tables and tp2 convergence studies."""
import csv
import time
from dataclasses import asdict, dataclass

import numpy as np

from .adaptor import AdaptiveConfig, run
from .chaos import IndexSet, MultiIndex, evaluate_basis
from .errors import UnsupportedProblemError
from .estimator import estimate
from .femkit.assembly import FeSpacePair, assemble_blocks
from .femkit.detail import build_detail_space
from .femkit.quadrature import gauss_line, gauss_square, physical_points
from .mesh import build_unit_square
from .problems import tp1, tp1_ubar, tp2
from .sgsystem import build_operator, solve_minres


@dataclass
class EffectivityRecord:
    nu: float
    h: float
    k: int
    option: str
    eta: float
    E: float
    effectivity: float


def exact_error_tp1(sol, blocks, problem, quad_points_y=20, quad=5):
    """Error norm of the mean fields against the tp1 exact solution.

    ``sqrt(alpha ||grad E(e_u)||^2 + (1/alpha + c) ||E(e_p)||^2 + c ||E(e_p~)||^2)``
    with expectations taken by Gauss-Legendre quadrature in ``y_1``.
    """
    if problem.id != "tp1":
        raise UnsupportedProblemError("an exact solution is only available for tp1")
    if quad_points_y < 10:
        raise ValueError("use at least 10 quadrature points in y")
    yq, wy = gauss_line(quad_points_y)
    wy = 0.5 * wy  # uniform probability density on [-1, 1]
    e1 = blocks.coeff.evaluate(1, np.zeros(2))
    mean_inv_E = float(np.sum(wy / (blocks.coeff.e0 + e1 * yq)))
    psi = evaluate_basis(sol.lam, yq[:, None])
    mean_w = psi @ wy  # E[psi_alpha] per index
    spaces = blocks.spaces
    pts, wts = gauss_square(quad)
    det = 0.25 * spaces.mesh.h ** 2
    _, g_ex = tp1_ubar(physical_points(spaces.mesh, pts))
    g_ex = mean_inv_E * g_ex
    Ubar = spaces.expand(mean_w @ sol.u)
    N = spaces.disp.ndofs
    _, gx = spaces.disp.evaluate(Ubar[:N], pts)
    _, gy = spaces.disp.evaluate(Ubar[N:], pts)
    diff = (g_ex[..., 0, :] - gx) ** 2 + (g_ex[..., 1, :] - gy) ** 2
    grad2 = float(np.sum(diff.sum(axis=-1) * wts) * det)
    p, _ = spaces.pres.evaluate(mean_w @ sol.p, pts)
    pt, _ = spaces.pres.evaluate(mean_w @ sol.pt, pts)
    p2 = float(np.sum(p ** 2 * wts) * det)
    pt2 = float(np.sum(pt ** 2 * wts) * det)
    c = blocks.c
    return float(np.sqrt(blocks.alpha * grad2 + (1.0 / blocks.alpha + c) * p2 + c * pt2))


def tp1_cell(nu, level, k, option="I", pressure="pminus1", minres_tol=1e-10, maxit=2000,
             localization="global"):
    """Solve tp1 on one (nu, level, k) configuration and return the record and pieces."""
    problem = tp1(nu)
    mesh = build_unit_square(level, problem.bc)
    spaces = FeSpacePair(mesh, pressure)
    blocks = assemble_blocks(spaces, problem.coeff, nu, problem.force)
    lam = IndexSet.total_degree_1d(k, 1)
    op = build_operator(blocks, lam)
    sol, report = solve_minres(op, tol=minres_tol, maxit=maxit)
    detail = build_detail_space(blocks, option)
    Q = IndexSet([MultiIndex.unit(1, k + 1)])
    est = estimate(blocks, detail, sol, Q, localization=localization)
    err = exact_error_tp1(sol, blocks, problem)
    rec = EffectivityRecord(nu, mesh.h, k, option, est.eta, err, est.eta / err)
    return rec, est, sol, report


def run_tp1_effectivity(nus, levels, degrees, option="I", out=None, pressure="pminus1",
                        minres_tol=1e-10, log=None, localization="global"):
    """Table of effectivity indices; optionally written to ``out`` as CSV."""
    records = []
    for level in levels:
        for k in degrees:
            for nu in nus:
                t0 = time.perf_counter()
                rec, est, _, report = tp1_cell(nu, level, k, option, pressure, minres_tol,
                                               localization=localization)
                records.append(rec)
                if log is not None:
                    log({"event": "tp1-cell", **asdict(rec), "solver": report.as_dict(),
                         "estimate": est.as_dict(), "seconds": time.perf_counter() - t0})
    if out is not None:
        write_records(records, out)
    return records


def write_records(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nu", "h", "k", "option", "eta", "E", "effectivity"])
        for r in records:
            w.writerow([r.nu, r.h, r.k, r.option, f"{r.eta:.10g}", f"{r.E:.10g}", f"{r.effectivity:.6f}"])


VARIANT_LABEL = "uniform-spatial variant"


def run_tp2_convergence(nu, sigma=2.0, alpha_bar=0.5, config=None, out=None, plot=None,
                        jsonl=None, log=None):
    """Adaptive run on tp2 with uniform mesh refinement.

    Writes the step trace to ``out`` and ``log10(n_total), log10(eta)``
    pairs to ``plot``.  Returns the trace.
    """
    config = config or AdaptiveConfig()
    problem = tp2(nu, sigma, alpha_bar)
    if log is not None:
        log({"event": "tp2-start", "variant": VARIANT_LABEL, "nu": nu, "sigma": sigma,
             "alpha_bar": alpha_bar, "config": asdict(config)})
        callback = lambda row: log({"event": "tp2-step", "variant": VARIANT_LABEL, **asdict(row)})
    else:
        callback = None
    _, trace = run(config, problem, jsonl=jsonl, callback=callback)
    if out is not None:
        trace.to_csv(out)
    if plot is not None:
        write_plot_data(trace, plot, f"tp2 {VARIANT_LABEL}: nu={nu} sigma={sigma} alpha_bar={alpha_bar}")
    return trace


def write_plot_data(trace, path, title):
    n = np.asarray(trace.column("n_total"), dtype=float)
    eta = np.asarray(trace.column("eta"))
    with open(path, "w") as fh:
        fh.write(f"# {title}\n# log10_n log10_eta\n")
        for a, b in zip(np.log10(n), np.log10(eta)):
            fh.write(f"{a:.8f} {b:.8f}\n")


def fitted_slope(trace, n_min=1e3, n_max=1e5):
    """Least-squares slope of log eta against log n over steps with n in [n_min, n_max]."""
    n = np.asarray(trace.column("n_total"), dtype=float)
    eta = np.asarray(trace.column("eta"))
    m = (n >= n_min) & (n <= n_max)
    if m.sum() < 2:
        raise ValueError("fewer than two steps inside the dof window")
    return float(np.polyfit(np.log10(n[m]), np.log10(eta[m]), 1)[0])
